//! Piecewise continuation of the image potential below the cut-off `epsilon`
//! and through the plate, so the propagation grid can cover `z < 0`.

use rayon::prelude::*;

use crate::error::Result;
use crate::field::Grid2D;
use crate::scalar::Real;

use super::{bare_potential, PotentialParams};

/// `V_C(rho, z)`:
///
/// | region                                  | value                               |
/// |-----------------------------------------|-------------------------------------|
/// | `z > epsilon`                           | image potential                     |
/// | `0 <= z <= epsilon` and `|rho| < d/2`   | `-3 V0 z² / (2 epsilon²) + 5 V0 / 2` |
/// | `z < 0` and `|rho| < d/2`               | `5 V0 / 2`                          |
/// | otherwise                               | `V_<`                               |
///
/// With `invert_hole_continuation` the two `|rho| < d/2` conditions become
/// `|rho| >= d/2`.
pub fn extended_potential<T: Real>(rho: T, z: T, params: &PotentialParams<T>) -> T {
    if z > params.epsilon {
        // z > epsilon > 0 is never singular
        return bare_potential(rho, z, params).expect("image potential is regular above the cut-off");
    }
    let mut in_hole = rho.abs() < params.d * T::of(0.5);
    if params.invert_hole_continuation {
        in_hole = !in_hole;
    }
    let v0 = params.v0;
    let five_halves = T::of(2.5) * v0;
    if in_hole && z >= T::zero() {
        let e = params.epsilon;
        -T::of(1.5) * v0 * z * z / (e * e) + five_halves
    } else if in_hole {
        five_halves
    } else {
        params.v_less
    }
}

/// Samples `f(rho, z)` on every grid node, row-major with `z` fastest.
pub fn sample_on_grid<T: Real, F>(grid: &Grid2D<T>, f: F) -> Vec<T>
where
    F: Fn(T, T) -> T + Sync,
{
    let mut out = vec![T::zero(); grid.len()];
    out.par_chunks_mut(grid.n_z).zip(grid.rho.par_iter()).for_each(|(row, &rho)| {
        for (v, &z) in row.iter_mut().zip(grid.z.iter()) {
            *v = f(rho, z);
        }
    });
    out
}

/// `V_C` on the grid, computed once per `(theta, d, epsilon)`.
pub fn sample_extended<T: Real>(grid: &Grid2D<T>, params: &PotentialParams<T>) -> Result<Vec<T>> {
    grid.check_clear_of_rim(params.d)?;
    Ok(sample_on_grid(grid, |rho, z| extended_potential(rho, z, params)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: f64) -> PotentialParams<f64> {
        PotentialParams::new(0.4, d, 0.01, 0.018).unwrap()
    }

    #[test]
    fn hole_branch_at_plate_plane() {
        let p = params(1.0);
        assert_eq!(extended_potential(0.0, 0.0, &p), 2.5 * p.v0);
    }

    #[test]
    fn switches_to_image_potential_just_above_cutoff() {
        let p = params(1.0);
        let z = p.epsilon * (1.0 + 1e-12);
        assert_eq!(extended_potential(0.0, z, &p), bare_potential(0.0, z, &p).unwrap());
        assert_ne!(extended_potential(0.0, z, &p), p.v_less);
        assert!((extended_potential(0.0, p.epsilon, &p) / p.v0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn outside_hole_below_plate_is_v_less() {
        let p = params(1.0);
        assert_eq!(extended_potential(1.0, -1.0, &p), p.v_less);
        assert_eq!(extended_potential(0.6, 0.005, &p), p.v_less);
    }

    #[test]
    fn quadratic_branch_meets_constant_at_plate_plane() {
        let p = params(2.0);
        let below = extended_potential(0.1, -1e-300, &p);
        let at = extended_potential(0.1, 0.0, &p);
        assert_eq!(below, at);
    }

    #[test]
    fn inversion_swaps_regions() {
        let p = params(1.0).with_inverted_hole_continuation(true);
        assert_eq!(extended_potential(0.0, -1.0, &p), p.v_less);
        assert_eq!(extended_potential(0.0, 0.005, &p), p.v_less);
        assert_eq!(extended_potential(2.0, -1.0, &p), 2.5 * p.v0);
        assert_eq!(extended_potential(2.0, 0.0, &p), 2.5 * p.v0);
    }

    #[test]
    fn inverted_continuation_is_c1_at_cutoff_without_hole() {
        let p = params(0.0).with_inverted_hole_continuation(true);
        let e = p.epsilon;
        let h = e * 1e-6;
        let inside = extended_potential(0.0, e, &p);
        assert!(((inside - p.v0) / p.v0).abs() < 1e-14);
        let slope_in = (extended_potential(0.0, e, &p) - extended_potential(0.0, e - h, &p)) / h;
        let slope_out = (extended_potential(0.0, e + h, &p) - extended_potential(0.0, e, &p)) / h;
        assert!(((slope_in - slope_out) / slope_out).abs() < 1e-4);
    }

    #[test]
    fn parity_in_rho() {
        for inv in [false, true] {
            let p = params(3.0).with_inverted_hole_continuation(inv);
            for &(rho, z) in &[(0.3, 0.5), (1.49, 0.005), (2.0, -3.0), (0.7, 0.0)] {
                assert_eq!(extended_potential(rho, z, &p), extended_potential(-rho, z, &p));
            }
        }
    }
}
