//! Reflectivities, moments and sweep normalisation.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::field::WaveField;
use crate::scalar::Real;

/// Deterministic `sum over rows of f(row, row_index)`.
fn row_sum<T: Real, F>(psi: &[Complex<T>], row: usize, f: F) -> f64
where
    F: Fn(&[Complex<T>], usize) -> f64 + Sync,
{
    let parts: Vec<f64> = psi.par_chunks(row).enumerate().map(|(i, r)| f(r, i)).collect();
    parts.iter().sum()
}

/// Probability in `z > 0` (midpoint rule).
pub fn reflectivity_position<T: Real>(field: &WaveField<T>) -> f64 {
    let g = &field.grid;
    let start = g.z.partition_point(|&z| z <= T::zero());
    row_sum(&field.psi, g.n_z, |r, _| r[start..].iter().map(|p| p.norm_sqr().as_f64()).sum()) * g.cell_area().as_f64()
}

/// Probability in `z < 0`.
pub fn transmission_position<T: Real>(field: &WaveField<T>) -> f64 {
    let g = &field.grid;
    let end = g.z.partition_point(|&z| z < T::zero());
    row_sum(&field.psi, g.n_z, |r, _| r[..end].iter().map(|p| p.norm_sqr().as_f64()).sum()) * g.cell_area().as_f64()
}

fn spectrum<T: Real>(field: &WaveField<T>) -> Vec<Complex<T>> {
    let g = &field.grid;
    let mut s = field.psi.clone();
    Fft2::new(g.n_rho, g.n_z).forward(&mut s);
    s
}

/// Probability with `k_z > 0`, normalised so the full spectrum carries the
/// position-space norm.
pub fn reflectivity_momentum<T: Real>(field: &WaveField<T>) -> f64 {
    let g = &field.grid;
    let s = spectrum(field);
    let kz = &g.k_z;
    row_sum(&s, g.n_z, |r, _| {
        r.iter().zip(kz.iter()).filter(|(_, &k)| k > T::zero()).map(|(p, _)| p.norm_sqr().as_f64()).sum()
    }) * g.spectral_weight().as_f64()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pair<T> {
    pub z: T,
    pub rho: T,
}

/// First and second moments of a field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments<T> {
    pub norm: T,
    pub position: Pair<T>,
    pub momentum: Pair<T>,
    /// Standard deviation of `|psi|^2`.
    pub width: Pair<T>,
}

/// Position moments over the grid, momentum moments from the spectrum.
/// Everything is normalised by the field's own norm.
pub fn expectation_values<T: Real>(field: &WaveField<T>) -> Moments<f64> {
    let g = &field.grid;
    let z: Vec<f64> = g.z.iter().map(|v| v.as_f64()).collect();
    let rho: Vec<f64> = g.rho.iter().map(|v| v.as_f64()).collect();
    let sums = |f: &(dyn Fn(f64, f64) -> f64 + Sync), psi: &[Complex<T>], xs: &[f64], ys: &[f64]| {
        row_sum(psi, g.n_z, |r, i| r.iter().zip(xs.iter()).map(|(p, &x)| p.norm_sqr().as_f64() * f(x, ys[i])).sum())
    };
    let m0 = sums(&|_, _| 1.0, &field.psi, &z, &rho);
    let mz = sums(&|z, _| z, &field.psi, &z, &rho) / m0;
    let mr = sums(&|_, r| r, &field.psi, &z, &rho) / m0;
    let vz = sums(&|z, _| (z - mz) * (z - mz), &field.psi, &z, &rho) / m0;
    let vr = sums(&|_, r| (r - mr) * (r - mr), &field.psi, &z, &rho) / m0;

    let s = spectrum(field);
    let kz: Vec<f64> = g.k_z.iter().map(|v| v.as_f64()).collect();
    let kr: Vec<f64> = g.k_rho.iter().map(|v| v.as_f64()).collect();
    let s0 = sums(&|_, _| 1.0, &s, &kz, &kr);
    let pz = sums(&|k, _| k, &s, &kz, &kr) / s0;
    let pr = sums(&|_, k| k, &s, &kz, &kr) / s0;
    Moments {
        norm: m0 * g.cell_area().as_f64(),
        position: Pair { z: mz, rho: mr },
        momentum: Pair { z: pz, rho: pr },
        width: Pair { z: vz.sqrt(), rho: vr.sqrt() },
    }
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub atom: String,
    pub v: f64,
    pub d: f64,
    pub theta: f64,
    pub n_rho: usize,
    pub n_z: usize,
    pub epsilon: f64,
    pub dt: f64,
    pub t_final: f64,
    pub r_pos: f64,
    pub r_mom: f64,
    pub r_norm: Option<f64>,
    pub norm_final: f64,
    pub runtime_s: f64,
}

impl SweepRow {
    /// Rows sharing a key belong to the same normalisation group.
    pub(crate) fn group_key(&self) -> (String, u64, u64, usize, usize, u64, u64) {
        (
            self.atom.clone(),
            self.v.to_bits(),
            self.theta.to_bits(),
            self.n_rho,
            self.n_z,
            self.epsilon.to_bits(),
            self.dt.to_bits(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Fills `r_norm = R(d, theta) / R(0, theta)` within each group of rows that
/// share everything but `d`.
pub fn normalize_sweep(mut raw: SweepResult) -> Result<SweepResult> {
    use std::collections::HashMap;
    let mut base = HashMap::new();
    for r in raw.rows.iter().filter(|r| r.d == 0.0) {
        base.insert(r.group_key(), r.r_pos);
    }
    for r in raw.rows.iter_mut() {
        let b = base.get(&r.group_key()).ok_or_else(|| {
            Error::invalid(format!("no d = 0 baseline for theta = {} ({}, N_z = {})", r.theta, r.atom, r.n_z))
        })?;
        r.r_norm = Some(if r.d == 0.0 { 1.0 } else { r.r_pos / b });
    }
    Ok(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_packet, Grid2D};
    use proptest::prelude::*;

    #[test]
    fn packet_above_plate_is_fully_reflected() {
        let g = Grid2D::<f64>::square(256).unwrap();
        let f = gaussian_packet(&g, 4.0, 0.0, 0.5, 3.0).unwrap();
        assert!((reflectivity_position(&f) - f.norm()).abs() < 1e-12);
    }

    #[test]
    fn fresh_packet_tail() {
        let g = Grid2D::<f64>::square(256).unwrap();
        let f = gaussian_packet(&g, 4.0, 0.0, 1.0, 3.0).unwrap();
        assert!((reflectivity_position(&f) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn one_sided_spectrum() {
        let g = Grid2D::<f64>::square(256).unwrap();
        // momentum +p0 along z
        let f = gaussian_packet(&g, 4.0, 0.0, 1.0, -20.0).unwrap();
        assert!((reflectivity_momentum(&f) - 1.0).abs() < 1e-6);
        let b = gaussian_packet(&g, 4.0, 0.0, 1.0, 20.0).unwrap();
        assert!(reflectivity_momentum(&b) < 1e-6);
    }

    #[test]
    fn parseval() {
        let g = Grid2D::<f64>::square(128).unwrap();
        let f = gaussian_packet(&g, 3.0, 0.5, 1.0, 0.0).unwrap();
        let s = spectrum(&f);
        let total: f64 = s.iter().map(|p| p.norm_sqr()).sum::<f64>() * g.spectral_weight();
        assert!((total - 1.0).abs() < 1e-12);
    }

    fn row(theta: f64, d: f64, r: f64) -> SweepRow {
        SweepRow {
            atom: "He3".into(),
            v: 2.0,
            d,
            theta,
            n_rho: 64,
            n_z: 64,
            epsilon: 0.01,
            dt: 0.005,
            t_final: 0.21,
            r_pos: r,
            r_mom: r,
            r_norm: None,
            norm_final: 1.0,
            runtime_s: 0.0,
        }
    }

    #[test]
    fn normalisation_uses_baseline() {
        let raw = SweepResult { rows: vec![row(0.0, 0.0, 0.2), row(0.0, 4.0, 0.1), row(0.5, 0.0, 0.3), row(0.5, 4.0, 0.3)] };
        let out = normalize_sweep(raw).unwrap();
        let n: Vec<f64> = out.rows.iter().map(|r| r.r_norm.unwrap()).collect();
        assert_eq!(n, vec![1.0, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn missing_baseline_is_an_error() {
        let raw = SweepResult { rows: vec![row(0.0, 0.0, 0.2), row(0.5, 4.0, 0.3)] };
        assert!(matches!(normalize_sweep(raw), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn zero_baseline_yields_non_finite_ratio_not_panic() {
        let raw = SweepResult { rows: vec![row(0.0, 0.0, 0.0), row(0.0, 4.0, 0.0)] };
        let out = normalize_sweep(raw).unwrap();
        assert_eq!(out.rows[0].r_norm, Some(1.0));
        assert!(out.rows[1].r_norm.unwrap().is_nan());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn split_adds_up_and_ignores_phase(z0 in -3.0f64..3.0, theta in 0.0f64..1.5, p0 in -20.0f64..20.0, phi in 0.0f64..6.3) {
            let g = Grid2D::<f64>::square(128).unwrap();
            let mut f = gaussian_packet(&g, z0, theta, 1.0, p0).unwrap();
            let r = reflectivity_position(&f);
            let t = transmission_position(&f);
            prop_assert!((r + t - f.norm()).abs() < 1e-12);
            let rm = reflectivity_momentum(&f);
            f.apply_global_phase(phi);
            prop_assert!((reflectivity_position(&f) - r).abs() < 1e-14);
            prop_assert!((reflectivity_momentum(&f) - rm).abs() < 1e-12);
        }
    }
}
