//! Time-independent 1D reflection by Numerov integration, used to check the 2D
//! solver at normal incidence.
//!
//! The solution is started as a pure WKB wave travelling towards `-z` at
//! `z_match` and integrated outwards to `z_far`, where it is split into
//! incident `e^{-ikz}` and reflected `e^{ikz}` parts.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::potential::{reflection_distance, AxisSlice, Potential1d};
use crate::units::{kinetic_params, natural_units, AtomSpec, MICROMETRE};

type C = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumerovOptions {
    /// Steps per shortest local wavelength.
    pub points_per_wavelength: f64,
    /// Largest accepted `|R(h) - R(h/2)|`.
    pub tolerance: f64,
}

impl Default for NumerovOptions {
    fn default() -> Self {
        Self { points_per_wavelength: 40.0, tolerance: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumerovReport {
    /// Richardson-extrapolated reflection probability.
    pub r: f64,
    pub t: f64,
    pub r_coarse: f64,
    pub r_fine: f64,
    /// Coarse target step; the fine pass uses half of it.
    pub h: f64,
}

struct Trace {
    z: Vec<f64>,
    psi: Vec<C>,
    dpsi: Vec<C>,
}

struct Solution {
    psi: C,
    dpsi: C,
    k_in: f64,
    k_far: f64,
    trace: Option<Trace>,
}

fn local_k(v1d: &dyn Potential1d<f64>, energy: f64, z: f64) -> Result<f64> {
    let v = v1d.value(z)?;
    if !(energy > v) {
        return Err(Error::ClassicallyForbidden { z, energy, potential: v });
    }
    Ok((2.0 * (energy - v)).sqrt())
}

/// Shortest local wavelength on `[a, b]`, from a dense scan.
fn min_wavelength(v1d: &dyn Potential1d<f64>, energy: f64, a: f64, b: f64) -> Result<f64> {
    let n = 4000;
    let mut kmax = 0.0f64;
    let mut pts: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    if a > 0.0 {
        pts.extend((0..=n).map(|i| a * (b / a).powf(i as f64 / n as f64)));
    }
    for z in pts {
        kmax = kmax.max(local_k(v1d, energy, nudge(z, a, b))?);
    }
    Ok(std::f64::consts::TAU / kmax)
}

fn delta(z: f64) -> f64 {
    1e-12 * z.abs().max(1.0)
}

/// Keeps evaluation points strictly inside `[a, b]`.
fn nudge(z: f64, a: f64, b: f64) -> f64 {
    z.max(a + delta(a)).min(b - delta(b))
}

/// `(psi, psi')` carried from `a` to `a + h` by classical RK4 on fine substeps.
fn rk4_start(v1d: &dyn Potential1d<f64>, energy: f64, a: f64, b: f64, h: f64, psi: C, dpsi: C) -> Result<C> {
    const SUB: usize = 32;
    let s = h / SUB as f64;
    let f = |z: f64| -> Result<f64> { Ok(2.0 * (v1d.value(nudge(z, a, b))? - energy)) };
    let (mut y, mut dy) = (psi, dpsi);
    for j in 0..SUB {
        let z = a + s * j as f64;
        let (f0, fm, f1) = (f(z)?, f(z + 0.5 * s)?, f(z + s)?);
        let (k1y, k1d) = (dy, f0 * y);
        let (k2y, k2d) = (dy + k1d * (0.5 * s), fm * (y + k1y * (0.5 * s)));
        let (k3y, k3d) = (dy + k2d * (0.5 * s), fm * (y + k2y * (0.5 * s)));
        let (k4y, k4d) = (dy + k3d * s, f1 * (y + k3y * s));
        y += (k1y + k2y * 2.0 + k3y * 2.0 + k4y) * (s / 6.0);
        dy += (k1d + k2d * 2.0 + k3d * 2.0 + k4d) * (s / 6.0);
    }
    Ok(y)
}

/// Numerov from `z_match` to `z_far`, restarting at every breakpoint. With
/// `record_until`, keeps `(z, psi, psi')` for `z <= record_until`.
fn integrate(
    v1d: &dyn Potential1d<f64>,
    energy: f64,
    z_match: f64,
    z_far: f64,
    h_target: f64,
    record_until: Option<f64>,
) -> Result<Solution> {
    let mut cuts: Vec<f64> = v1d.breakpoints().into_iter().filter(|&b| b > z_match && b < z_far).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![z_match];
    edges.extend(cuts);
    edges.push(z_far);

    let ii = C::new(0.0, 1.0);
    let (_, v1, _) = v1d.derivatives(z_match + delta(z_match))?;
    let k_in = local_k(v1d, energy, z_match + delta(z_match))?;
    let kp = -v1 / k_in;
    let mut psi = C::new(1.0, 0.0);
    let mut dpsi = psi * (-ii * k_in - kp / (2.0 * k_in));
    let mut trace = record_until.map(|_| Trace { z: Vec::new(), psi: Vec::new(), dpsi: Vec::new() });
    let until = record_until.unwrap_or(f64::NEG_INFINITY);

    for seg in edges.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let n = ((b - a) / h_target).ceil().max(3.0) as usize;
        let h = (b - a) / n as f64;
        let z_at = |i: usize| if i == n { b } else { a + h * i as f64 };
        let f_at = |i: usize| -> Result<f64> { Ok(2.0 * (v1d.value(nudge(z_at(i), a, b))? - energy)) };
        let record = a <= until;

        let first = rk4_start(v1d, energy, a, b, h, psi, dpsi)?;
        let mut ys = Vec::new();
        let mut fs_all = Vec::new();
        let mut fs = [f_at(0)?, f_at(1)?, 0.0];
        let mut y = [psi, first, C::new(0.0, 0.0)];
        if record {
            ys.extend([y[0], y[1]]);
            fs_all.extend([fs[0], fs[1]]);
        }
        let c = h * h / 12.0;
        let mut prev2 = (y[0], fs[0]);
        for i in 2..=n {
            fs[2] = f_at(i)?;
            y[2] = (y[1] * (2.0 * (1.0 + 5.0 * c * fs[1])) - y[0] * (1.0 - c * fs[0])) / (1.0 - c * fs[2]);
            if !(y[2].re.is_finite() && y[2].im.is_finite()) {
                return Err(Error::NotConverged(format!("Numerov overflow at z = {}", z_at(i))));
            }
            prev2 = (y[0], fs[0]);
            y.rotate_left(1);
            fs.rotate_left(1);
            if record && z_at(i) <= until + h {
                ys.push(y[1]);
                fs_all.push(fs[1]);
            }
        }
        // y[1] = psi_n, y[0] = psi_{n-1}, prev2 = psi_{n-2}
        let (gn, gn1, gn2) = (fs[1] * y[1], fs[0] * y[0], prev2.1 * prev2.0);
        let d_end = (y[1] - y[0]) / h + (gn * 7.0 + gn1 * 6.0 - gn2) * (h / 24.0);
        if let Some(t) = trace.as_mut().filter(|_| record) {
            let skip = usize::from(!t.z.is_empty());
            // interior derivative with O(h^4) error
            for i in skip..ys.len().saturating_sub(1).max(1) {
                let d = if i == 0 {
                    dpsi
                } else {
                    (ys[i + 1] - ys[i - 1]) / (2.0 * h) - (ys[i + 1] * fs_all[i + 1] - ys[i - 1] * fs_all[i - 1]) * (h / 12.0)
                };
                t.z.push(z_at(i));
                t.psi.push(ys[i]);
                t.dpsi.push(d);
            }
        }
        psi = y[1];
        dpsi = d_end;
    }
    let k_far = local_k(v1d, energy, z_far - delta(z_far))?;
    Ok(Solution { psi, dpsi, k_in, k_far, trace })
}

fn split(sol: &Solution, z_far: f64) -> (f64, f64) {
    let ii = C::new(0.0, 1.0);
    let k = sol.k_far;
    let a = (sol.psi - sol.dpsi / (ii * k)) * 0.5 * C::from_polar(1.0, k * z_far);
    let b = (sol.psi + sol.dpsi / (ii * k)) * 0.5 * C::from_polar(1.0, -k * z_far);
    let r = b.norm_sqr() / a.norm_sqr();
    let t = sol.k_in / (k * a.norm_sqr());
    (r, t)
}

fn check_inputs(v1d: &dyn Potential1d<f64>, energy: f64, z_match: f64, z_far: f64) -> Result<()> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::invalid(format!("energy must be positive, got {energy}")));
    }
    if !(z_far > z_match) || !z_match.is_finite() || !z_far.is_finite() {
        return Err(Error::invalid(format!("need z_match < z_far, got {z_match}, {z_far}")));
    }
    let tail = v1d.value(z_far - delta(z_far))?;
    if tail.abs() >= 1e-6 * energy {
        return Err(Error::invalid(format!(
            "potential at z_far = {z_far} is {tail:.3e}, not negligible against E = {energy}"
        )));
    }
    Ok(())
}

/// Reflection probability with explicit resolution settings.
pub fn numerov_reflectivity_with(
    v1d: &dyn Potential1d<f64>,
    energy: f64,
    z_match: f64,
    z_far: f64,
    options: &NumerovOptions,
) -> Result<NumerovReport> {
    check_inputs(v1d, energy, z_match, z_far)?;
    let h = min_wavelength(v1d, energy, z_match, z_far)? / options.points_per_wavelength;
    let (r_coarse, t_coarse) = split(&integrate(v1d, energy, z_match, z_far, h, None)?, z_far);
    let (r_fine, t_fine) = split(&integrate(v1d, energy, z_match, z_far, 0.5 * h, None)?, z_far);
    if !((r_fine - r_coarse).abs() <= options.tolerance) {
        return Err(Error::NotConverged(format!(
            "R changed from {r_coarse:.6e} to {r_fine:.6e} on halving h = {h:.3e}"
        )));
    }
    let r = (r_fine + (r_fine - r_coarse) / 15.0).clamp(0.0, 1.0);
    let t = t_fine + (t_fine - t_coarse) / 15.0;
    Ok(NumerovReport { r, t, r_coarse, r_fine, h })
}

/// Reflection probability of `v1d` at energy `energy`.
pub fn numerov_reflectivity(v1d: &dyn Potential1d<f64>, energy: f64, z_match: f64, z_far: f64) -> Result<f64> {
    Ok(numerov_reflectivity_with(v1d, energy, z_match, z_far, &NumerovOptions::default())?.r)
}

/// Smallest `z` with `|V(z)| < 1e-6 E` beyond `start`, found by doubling.
pub fn far_point(v1d: &dyn Potential1d<f64>, energy: f64, start: f64) -> Result<f64> {
    let mut z = start.max(1e-6) * 2.0;
    for _ in 0..200 {
        if v1d.value(z)?.abs() < 0.5e-6 * energy {
            return Ok(z);
        }
        z *= 1.25;
    }
    Err(Error::invalid("potential does not decay"))
}

/// Natural-unit 1D problem for `atom` at normal incidence on a plain plate.
pub fn plate_problem(atom: &AtomSpec, v: f64) -> Result<(AxisSlice<f64>, f64)> {
    let units = natural_units(atom, MICROMETRE)?;
    let c3 = units.c3_to_natural(atom.require_c3()?);
    let e0 = kinetic_params(v, &units)?.e0;
    Ok((AxisSlice::new(0.0, 0.0, c3), e0))
}

/// Compares the badlands maximum with where the exact solution departs most
/// from its local WKB form.
#[derive(Debug, Clone, PartialEq)]
pub struct BadlandsReport {
    pub atom: String,
    pub v: f64,
    /// Natural length (µm).
    pub z_r: f64,
    /// Maximum of the local ratio `|b/a|` of counter- to co-propagating WKB amplitudes.
    pub z_peak: f64,
    /// Where `|b/a|` exceeds half its maximum.
    pub interval: (f64, f64),
    pub r_1d: f64,
    /// `z_r` inside `interval`.
    pub overlap: bool,
}

pub fn badlands_peak_check(atom: &AtomSpec, v: f64) -> Result<BadlandsReport> {
    let z_r = reflection_distance(atom, v)?.z;
    let (slice, e0) = plate_problem(atom, v)?;
    let z_match = z_r / 10.0;
    let z_far = far_point(&slice, e0, z_r)?;
    let h = min_wavelength(&slice, e0, z_match, z_far)? / NumerovOptions::default().points_per_wavelength;
    let sol = integrate(&slice, e0, z_match, z_far, h, Some(10.0 * z_r))?;
    let (r_1d, _) = split(&sol, z_far);
    let tr = sol.trace.as_ref().expect("trace was requested");
    let ii = C::new(0.0, 1.0);
    // psi = a k^{-1/2} e^{-iS} + b k^{-1/2} e^{iS} with psi' matched to first order
    let ratio = tr
        .z
        .iter()
        .zip(tr.psi.iter().zip(tr.dpsi.iter()))
        .map(|(&z, (&p, &dp))| {
            let (vv, v1, _) = slice.derivatives(z)?;
            let k = (2.0 * (e0 - vv)).sqrt();
            let q = -v1 / (2.0 * k * k);
            let b = dp + (ii * k + q) * p;
            let a = dp - (ii * k - q) * p;
            Ok(b.norm() / a.norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (imax, &dmax) = ratio
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .ok_or_else(|| Error::NotConverged("empty trace".into()))?;
    let lo = (0..=imax).rev().find(|&i| ratio[i] < 0.5 * dmax).map_or(0, |i| i + 1);
    let hi = (imax..ratio.len()).find(|&i| ratio[i] < 0.5 * dmax).map_or(ratio.len() - 1, |i| i - 1);
    let interval = (tr.z[lo], tr.z[hi]);
    Ok(BadlandsReport {
        atom: atom.name.clone(),
        v,
        z_r,
        z_peak: tr.z[imax],
        interval,
        r_1d,
        overlap: z_r >= interval.0 && z_r <= interval.1,
    })
}
