//! One-dimensional potentials and the badlands diagnostic.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::units::{kinetic_params, natural_units, AtomSpec, MICROMETRE};

use super::image::{bare_potential_raw, ZERO_DIAMETER};

/// Default scan range for [`reflection_distance`], µm.
pub const BADLANDS_SCAN_RANGE_UM: (f64, f64) = (1e-6, 10.0);
const SCAN_POINTS: usize = 2000;

/// A potential along one axis.
pub trait Potential1d<T: Real = f64>: Sync {
    fn value(&self, z: T) -> Result<T>;

    /// `(V, V', V'')`. Defaults to 5-point central differences with `h = z/1000`.
    fn derivatives(&self, z: T) -> Result<(T, T, T)> {
        let h = (z * T::of(1e-3)).abs();
        if h == T::zero() {
            return Err(Error::Domain(format!("cannot difference at z = {z}")));
        }
        let f = |k: f64| self.value(z + T::of(k) * h);
        let (m2, m1, c, p1, p2) = (f(-2.0)?, f(-1.0)?, f(0.0)?, f(1.0)?, f(2.0)?);
        let d1 = (m2 - T::of(8.0) * m1 + T::of(8.0) * p1 - p2) / (T::of(12.0) * h);
        let d2 = (-m2 + T::of(16.0) * m1 - T::of(30.0) * c + T::of(16.0) * p1 - p2) / (T::of(12.0) * h * h);
        Ok((c, d1, d2))
    }

    /// Points where the potential or its derivatives jump.
    fn breakpoints(&self) -> Vec<T> {
        Vec::new()
    }
}

/// The on-axis slice `V(0, z; theta, d)` of the image potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSlice<T> {
    pub theta: T,
    pub d: T,
    pub c3: T,
}

impl<T: Real> AxisSlice<T> {
    pub fn new(theta: T, d: T, c3: T) -> Self {
        Self { theta, d, c3 }
    }

    fn power_law(&self) -> Option<PowerLawSlice<T>> {
        if self.d < T::of(ZERO_DIAMETER) {
            let s = self.theta.sin();
            let c = self.theta.cos();
            let coeff = self.c3 * (s * s * T::of(0.25) + c * c * T::of(0.5));
            Some(PowerLawSlice { coeff, power: 3 })
        } else {
            None
        }
    }
}

/// `potential_slice_1d(z; theta, d, C3)`.
pub fn potential_slice_1d<T: Real>(z: T, theta: T, d: T, c3: T) -> Result<T> {
    AxisSlice::new(theta, d, c3).value(z)
}

impl<T: Real> Potential1d<T> for AxisSlice<T> {
    fn value(&self, z: T) -> Result<T> {
        if !(z > T::zero()) {
            return Err(Error::Domain(format!("1D slice needs z > 0, got {z}")));
        }
        match self.power_law() {
            Some(p) => p.value(z),
            None => bare_potential_raw(T::zero(), z, self.theta, self.d, self.c3),
        }
    }

    fn derivatives(&self, z: T) -> Result<(T, T, T)> {
        if !(z > T::zero()) {
            return Err(Error::Domain(format!("1D slice needs z > 0, got {z}")));
        }
        match self.power_law() {
            Some(p) => p.derivatives(z),
            None => {
                let h = z * T::of(1e-3);
                let f = |k: f64| bare_potential_raw(T::zero(), z + T::of(k) * h, self.theta, self.d, self.c3);
                let (m2, m1, c, p1, p2) = (f(-2.0)?, f(-1.0)?, f(0.0)?, f(1.0)?, f(2.0)?);
                let d1 = (m2 - T::of(8.0) * m1 + T::of(8.0) * p1 - p2) / (T::of(12.0) * h);
                let d2 = (-m2 + T::of(16.0) * m1 - T::of(30.0) * c + T::of(16.0) * p1 - p2) / (T::of(12.0) * h * h);
                Ok((c, d1, d2))
            }
        }
    }
}

/// `-coeff / z^power` for `z > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawSlice<T> {
    pub coeff: T,
    pub power: i32,
}

impl<T: Real> Potential1d<T> for PowerLawSlice<T> {
    fn value(&self, z: T) -> Result<T> {
        if !(z > T::zero()) {
            return Err(Error::Domain(format!("power law needs z > 0, got {z}")));
        }
        Ok(-self.coeff / z.powi(self.power))
    }

    fn derivatives(&self, z: T) -> Result<(T, T, T)> {
        let v = self.value(z)?;
        let n = T::of(self.power as f64);
        Ok((v, -n * v / z, n * (n + T::one()) * v / (z * z)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPotential<T>(pub T);

impl<T: Real> Potential1d<T> for ConstantPotential<T> {
    fn value(&self, _z: T) -> Result<T> {
        Ok(self.0)
    }

    fn derivatives(&self, _z: T) -> Result<(T, T, T)> {
        Ok((self.0, T::zero(), T::zero()))
    }
}

/// `-depth` on `[start, start + width]`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareWell<T> {
    pub depth: T,
    pub start: T,
    pub width: T,
}

impl<T: Real> Potential1d<T> for SquareWell<T> {
    fn value(&self, z: T) -> Result<T> {
        Ok(if z >= self.start && z <= self.start + self.width { -self.depth } else { T::zero() })
    }

    fn derivatives(&self, z: T) -> Result<(T, T, T)> {
        Ok((self.value(z)?, T::zero(), T::zero()))
    }

    fn breakpoints(&self) -> Vec<T> {
        vec![self.start, self.start + self.width]
    }
}

/// Wraps a closure. Derivatives come from finite differences.
pub struct FnPotential<F> {
    f: F,
    breaks: Vec<f64>,
}

impl<F> FnPotential<F> {
    pub fn new(f: F) -> Self {
        Self { f, breaks: Vec::new() }
    }

    pub fn with_breakpoints(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }
}

impl<F> Potential1d<f64> for FnPotential<F>
where
    F: Fn(f64) -> f64 + Sync,
{
    fn value(&self, z: f64) -> Result<f64> {
        Ok((self.f)(z))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// `Q = [4(V - E) V'' - 5 V'^2] / [32 (E - V)^3]`.
pub fn badlands<T: Real, P: Potential1d<T> + ?Sized>(z: T, energy: T, v1d: &P) -> Result<T> {
    let (v, d1, d2) = v1d.derivatives(z)?;
    let kin = energy - v;
    if !(kin > T::zero()) {
        return Err(Error::ClassicallyForbidden {
            z: z.as_f64(),
            energy: energy.as_f64(),
            potential: v.as_f64(),
        });
    }
    Ok((T::of(4.0) * (v - energy) * d2 - T::of(5.0) * d1 * d1) / (T::of(32.0) * kin * kin * kin))
}

/// Result of a badlands peak search.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionDistance {
    /// Position of the maximum of `Q`, natural length.
    pub z: f64,
    pub q_max: f64,
    /// Coarse scan `(z, Q)` that bracketed the maximum.
    pub scan: Vec<(f64, f64)>,
}

/// Locates the maximum of `Q` on a logarithmic grid over `range`, refined by
/// golden-section search in `ln z` to 0.1% relative.
pub fn badlands_peak<P: Potential1d<f64> + ?Sized>(v1d: &P, energy: f64, range: (f64, f64)) -> Result<ReflectionDistance> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid(format!("bad scan range [{lo}, {hi}]")));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut scan = Vec::with_capacity(SCAN_POINTS);
    for i in 0..SCAN_POINTS {
        let z = (llo + (lhi - llo) * i as f64 / (SCAN_POINTS - 1) as f64).exp();
        scan.push((z, badlands(z, energy, v1d)?));
    }
    let (imax, _) = scan
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &(_, q))| if q > acc.1 { (i, q) } else { acc });
    if imax == 0 || imax == SCAN_POINTS - 1 || !scan[imax].1.is_finite() {
        let dump = scan
            .iter()
            .step_by(SCAN_POINTS / 20)
            .map(|(z, q)| format!("{z:.3e}:{q:.3e}"))
            .collect::<Vec<_>>()
            .join(" ");
        return Err(Error::NoInteriorMaximum { scan: dump });
    }

    let q_at = |lz: f64| badlands(lz.exp(), energy, v1d);
    let (mut a, mut b) = (scan[imax - 1].0.ln(), scan[imax + 1].0.ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut qc, mut qd) = (q_at(c)?, q_at(d)?);
    // tolerance in ln z corresponds to relative tolerance in z
    while b - a > 1e-4 {
        if qc > qd {
            b = d;
            d = c;
            qd = qc;
            c = b - g * (b - a);
            qc = q_at(c)?;
        } else {
            a = c;
            c = d;
            qc = qd;
            d = a + g * (b - a);
            qd = q_at(d)?;
        }
    }
    let z = (0.5 * (a + b)).exp();
    Ok(ReflectionDistance { z, q_max: badlands(z, energy, v1d)?, scan })
}

/// `z_R` in µm for `atom` at normal incidence on a plain plate, at speed `v` (m/s).
pub fn reflection_distance(atom: &AtomSpec, v: f64) -> Result<ReflectionDistance> {
    let units = natural_units(atom, MICROMETRE)?;
    let kin = kinetic_params(v, &units)?;
    let c3 = units.c3_to_natural(atom.require_c3()?);
    let slice = AxisSlice::new(0.0, 0.0, c3);
    badlands_peak(&slice, kin.e0, BADLANDS_SCAN_RANGE_UM)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NA_C3: f64 = 1.2207e-48;

    fn sodium() -> AtomSpec {
        AtomSpec::sodium().with_c3(NA_C3).unwrap()
    }

    fn helium_c3() -> f64 {
        let he = AtomSpec::helium3();
        natural_units(&he, MICROMETRE).unwrap().c3_to_natural(he.c3.unwrap())
    }

    #[test]
    fn slice_matches_closed_form_without_hole() {
        let c3 = 0.018f64;
        for &z in &[0.01, 0.1, 1.0] {
            let v = potential_slice_1d(z, 0.0, 0.0, c3).unwrap();
            assert!((v / (-c3 / (2.0 * z * z * z)) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn slice_has_cubic_scaling() {
        let a = potential_slice_1d(0.3f64, 0.0, 0.0, 1.0).unwrap();
        let b = potential_slice_1d(0.6, 0.0, 0.0, 1.0).unwrap();
        assert!((b / a - 0.125).abs() < 1e-14);
    }

    #[test]
    fn slice_rejects_plate_and_below() {
        assert!(matches!(potential_slice_1d(0.0, 0.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(potential_slice_1d(-1.0, 0.0, 0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn hole_influence_decays_far_from_plate() {
        let d = 2.0f64;
        let z = 100.0 * d;
        let with = potential_slice_1d(z, 0.0, d, 1.0).unwrap();
        let without = potential_slice_1d(z, 0.0, 0.0, 1.0).unwrap();
        assert!(with > without);
        assert!(((with - without) / without).abs() < 1e-3);
    }

    #[test]
    fn constant_potential_has_zero_q() {
        assert_eq!(badlands(0.5, 2.0, &ConstantPotential(-1.0)).unwrap(), 0.0);
    }

    #[test]
    fn q_decays_as_inverse_square_energy() {
        let p = PowerLawSlice { coeff: 1.0f64, power: 3 };
        let mut prev = f64::INFINITY;
        for &e in &[1e4, 1e5, 1e6, 1e7] {
            let q = badlands(0.1, e, &p).unwrap().abs();
            assert!(q < prev);
            prev = q;
        }
        let ratio = badlands(0.1, 1e8, &p).unwrap() / badlands(0.1, 2e8, &p).unwrap();
        assert!((ratio - 4.0).abs() < 1e-3, "ratio {ratio}");
    }

    #[test]
    fn forbidden_point_errors() {
        let r = badlands(1.0, -1.0, &ConstantPotential(0.0));
        assert!(matches!(r, Err(Error::ClassicallyForbidden { .. })));
    }

    #[test]
    fn finite_difference_derivatives_match_analytic() {
        let p = PowerLawSlice { coeff: 0.7, power: 3 };
        let f = FnPotential::new(|z: f64| -0.7 / (z * z * z));
        for &z in &[0.01, 0.2, 3.0] {
            let (v, a1, a2) = p.derivatives(z).unwrap();
            let (w, b1, b2) = f.derivatives(z).unwrap();
            assert_eq!(v, w);
            assert!(((a1 - b1) / a1).abs() < 1e-9);
            assert!(((a2 - b2) / a2).abs() < 1e-7);
        }
    }

    #[test]
    fn helium_single_interior_maximum() {
        let he = AtomSpec::helium3();
        let u = natural_units(&he, MICROMETRE).unwrap();
        let e = kinetic_params(2.0, &u).unwrap().e0;
        let slice = AxisSlice::new(0.0, 0.0, helium_c3());
        let eps = 0.01;
        let n = 4000;
        let qs: Vec<f64> = (0..n)
            .map(|i| eps * (100f64).powf(i as f64 / (n - 1) as f64))
            .map(|z| badlands(z, e, &slice).unwrap())
            .collect();
        let rises = qs.windows(2).map(|w| w[1] > w[0]).collect::<Vec<_>>();
        let turns = rises.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(turns, 1, "expected one turning point");
        assert!(rises[0] && !rises[rises.len() - 1]);
    }

    #[test]
    fn sodium_reflection_distance_near_fifth_of_wavelength() {
        let z_nm = reflection_distance(&sodium(), 0.1).unwrap().z * 1e3;
        assert!((80.0..=160.0).contains(&z_nm), "z_R = {z_nm} nm");
    }

    #[test]
    fn reflection_distance_decreases_with_speed() {
        let na = sodium();
        let zs: Vec<f64> = [0.05, 0.1, 0.5, 2.0, 10.0]
            .iter()
            .map(|&v| reflection_distance(&na, v).unwrap().z)
            .collect();
        assert!(zs.windows(2).all(|w| w[0] > w[1]), "{zs:?}");
    }

    #[test]
    fn fast_helium_reflects_in_non_retarded_regime() {
        let z_nm = reflection_distance(&AtomSpec::helium3(), 300.0).unwrap().z * 1e3;
        assert!(z_nm < 9.3 / 5.0, "z_R = {z_nm} nm");
    }

    #[test]
    fn scaling_c3_by_eight_doubles_reflection_distance() {
        let e = 655.0;
        let a = badlands_peak(&AxisSlice::new(0.0, 0.0, 4.0), e, BADLANDS_SCAN_RANGE_UM).unwrap().z;
        let b = badlands_peak(&AxisSlice::new(0.0, 0.0, 32.0), e, BADLANDS_SCAN_RANGE_UM).unwrap().z;
        assert!((b / a - 2.0).abs() < 2e-3, "ratio {}", b / a);
    }

    #[test]
    fn range_without_interior_peak_is_reported() {
        let slice = AxisSlice::new(0.0, 0.0, 4.0);
        let r = badlands_peak(&slice, 655.0, (1e-6, 1e-5));
        assert!(matches!(r, Err(Error::NoInteriorMaximum { .. })));
    }

    proptest! {
        #[test]
        fn peak_scales_as_cube_root_of_c3_over_energy(log_c in -2.0f64..2.0, log_e in 1.0f64..5.0) {
            let c = 10f64.powf(log_c);
            let e = 10f64.powf(log_e);
            let z = badlands_peak(&PowerLawSlice { coeff: c, power: 3 }, e, (1e-6, 100.0)).unwrap().z;
            let z_ref = badlands_peak(&PowerLawSlice { coeff: 1.0, power: 3 }, 1.0, (1e-6, 100.0)).unwrap().z;
            prop_assert!((z / (z_ref * (c / e).cbrt()) - 1.0).abs() < 2e-3);
        }
    }
}
