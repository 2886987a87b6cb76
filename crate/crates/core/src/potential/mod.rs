//! Atom-plate interaction: the exact image potential of the pore, its
//! continuation through the plate, 1D slices and the badlands diagnostic.

mod badlands;
mod extended;
mod image;

pub use badlands::{
    badlands, badlands_peak, potential_slice_1d, reflection_distance, AxisSlice, ConstantPotential, FnPotential, Potential1d,
    PowerLawSlice, ReflectionDistance, SquareWell, BADLANDS_SCAN_RANGE_UM,
};
pub use extended::{extended_potential, sample_extended, sample_on_grid};
pub use image::{bare_potential, shorthands, xi_coefficients, ShorthandValues, XiCoefficients, ZERO_DIAMETER};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Parameters of one potential configuration plus its two continuation anchors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams<T> {
    /// Dipole/incidence angle from the plate normal, radians.
    pub theta: T,
    /// Hole diameter.
    pub d: T,
    /// Cut-off height above the plate.
    pub epsilon: T,
    pub c3: T,
    /// `V(0, epsilon; theta, 0)`.
    pub v0: T,
    /// `V(0, epsilon; theta, d)`.
    pub v_less: T,
    /// Swaps the `|rho| < d/2` conditions of the continuation below `epsilon`.
    pub invert_hole_continuation: bool,
}

impl<T: Real> PotentialParams<T> {
    pub fn new(theta: T, d: T, epsilon: T, c3: T) -> Result<Self> {
        if !(theta >= T::zero() && theta <= T::FRAC_PI_2()) {
            return Err(Error::invalid(format!("theta must lie in [0, pi/2], got {theta}")));
        }
        if !(d >= T::zero()) || !d.is_finite() {
            return Err(Error::invalid(format!("hole diameter must be non-negative, got {d}")));
        }
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::invalid(format!("cut-off must be positive, got {epsilon}")));
        }
        if !(c3 > T::zero()) || !c3.is_finite() {
            return Err(Error::invalid(format!("C3 must be positive, got {c3}")));
        }
        let v0 = image::bare_potential_raw(T::zero(), epsilon, theta, T::zero(), c3)?;
        let v_less = image::bare_potential_raw(T::zero(), epsilon, theta, d, c3)?;
        Ok(Self {
            theta,
            d,
            epsilon,
            c3,
            v0,
            v_less,
            invert_hole_continuation: false,
        })
    }

    pub fn with_inverted_hole_continuation(mut self, invert: bool) -> Self {
        self.invert_hole_continuation = invert;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_are_attractive_and_coincide_without_hole() {
        let p = PotentialParams::new(0.3, 0.0, 0.01, 0.018).unwrap();
        assert!(p.v0 < 0.0);
        assert_eq!(p.v0, p.v_less);
        for &d in &[0.5, 1.0, 5.0, 12.0] {
            let p = PotentialParams::new(0.3, d, 0.01, 0.018).unwrap();
            assert!(p.v0 < 0.0 && p.v_less < 0.0);
            assert!(p.v_less > p.v0, "the hole weakens the potential at the axis");
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(PotentialParams::new(-0.1, 0.0, 0.01, 1.0).is_err());
        assert!(PotentialParams::new(2.0, 0.0, 0.01, 1.0).is_err());
        assert!(PotentialParams::new(0.0, -1.0, 0.01, 1.0).is_err());
        assert!(PotentialParams::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(PotentialParams::new(0.0, 0.0, 0.01, 0.0).is_err());
    }
}
