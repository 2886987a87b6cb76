//! Strang split-step propagation of the dimensionless TDSE
//! `i dpsi/dt = (-laplacian/2 + V - iW) psi` inside an absorbing frame.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::field::{weighted_norm, Grid2D, WaveField};
use crate::potential::{sample_extended, PotentialParams};
use crate::scalar::Real;

/// Time stepping and absorber settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig<T> {
    pub dt: T,
    pub t_final: T,
    /// Fraction of each extent covered by the absorber band on every edge.
    pub absorber_width: T,
    /// Peak absorber strength. Zero disables the absorber.
    pub absorber_strength: T,
    pub snapshot_times: Vec<T>,
}

impl<T: Real> Default for PropagationConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::of(0.005),
            t_final: T::of(0.21),
            absorber_width: T::of(0.10),
            absorber_strength: T::zero(),
            snapshot_times: Vec::new(),
        }
    }
}

impl<T: Real> PropagationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(Error::invalid(format!("t_final must be >= dt, got {}", self.t_final)));
        }
        if !(self.absorber_width > T::zero() && self.absorber_width < T::of(0.5)) {
            return Err(Error::invalid(format!("absorber width must lie in (0, 0.5), got {}", self.absorber_width)));
        }
        if !(self.absorber_strength >= T::zero()) || !self.absorber_strength.is_finite() {
            return Err(Error::invalid(format!("absorber strength must be >= 0, got {}", self.absorber_strength)));
        }
        Ok(())
    }

    /// `round(t_final / dt)`.
    pub fn n_steps(&self) -> usize {
        (self.t_final.as_f64() / self.dt.as_f64()).round().max(1.0) as usize
    }

    /// The final time actually reached, `n_steps * dt`.
    pub fn effective_t_final(&self) -> T {
        T::of_usize(self.n_steps()) * self.dt
    }
}

/// Non-negative absorber profile `W` on a grid; the propagator applies `-iW`.
#[derive(Debug, Clone, PartialEq)]
pub struct Absorber<T> {
    pub w: Vec<T>,
    pub strength: T,
    pub width: T,
}

impl<T: Real> Absorber<T> {
    pub fn is_interior(&self, index: usize) -> bool {
        self.w[index] == T::zero()
    }
}

/// Ramp `sin^2(pi s / 2)` where `s` runs from 0 at the inner edge of the band to
/// 1 at the domain boundary.
fn edge_profile<T: Real>(x: T, extent: T, width: T) -> T {
    let band = width * extent;
    let inner = extent * T::of(0.5) - band;
    let depth = x.abs() - inner;
    if depth <= T::zero() {
        return T::zero();
    }
    let s = (depth / band).min(T::one());
    let v = (T::FRAC_PI_2() * s).sin();
    v * v
}

/// `cos^2`-shaped absorber on all four edges, reaching `strength` at the
/// boundary. Where two bands overlap the larger value applies.
pub fn build_absorber<T: Real>(grid: &Grid2D<T>, width: T, strength: T) -> Absorber<T> {
    let fz: Vec<T> = grid.z.iter().map(|&z| edge_profile(z, grid.extent_z, width)).collect();
    let mut w = vec![T::zero(); grid.len()];
    w.par_chunks_mut(grid.n_z).zip(grid.rho.par_iter()).for_each(|(row, &rho)| {
        let fr = edge_profile(rho, grid.extent_rho, width);
        for (v, &f) in row.iter_mut().zip(fz.iter()) {
            *v = strength * fr.max(f);
        }
    });
    Absorber { w, strength, width }
}

fn phase_f64<T: Real>(phi: f64, decay: f64) -> Complex<T> {
    let a = (-decay).exp();
    Complex::new(T::of(a * phi.cos()), T::of(a * phi.sin()))
}

/// Precomputed phase tables for one grid, potential and time step.
pub struct Propagator<T: Real> {
    grid: Grid2D<T>,
    fft: Fft2<T>,
    dt: T,
    potential_phase: Vec<Complex<T>>,
    // separable kinetic factors in spectral (z-major) layout; the 1/N of the
    // inverse transform is folded into the rho factors
    half_z: Vec<Complex<T>>,
    half_rho: Vec<Complex<T>>,
    full_z: Vec<Complex<T>>,
    full_rho: Vec<Complex<T>>,
    interior_edge: Vec<usize>,
}

impl<T: Real> std::fmt::Debug for Propagator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator").field("n_rho", &self.grid.n_rho).field("n_z", &self.grid.n_z).finish()
    }
}

/// Result of [`propagate`].
#[derive(Debug, Clone)]
pub struct Propagation<T> {
    pub final_field: WaveField<T>,
    pub snapshots: Vec<WaveField<T>>,
    /// Norm at t = 0 and after each step.
    pub norm_history: Vec<f64>,
    pub n_steps: usize,
    /// `n_steps * dt`.
    pub t_final: T,
    /// `t_final` reached minus `t_final` requested.
    pub t_final_adjustment: T,
    /// Peak `|psi|^2` on the ring of interior nodes bordering the absorber,
    /// relative to the global peak, at the final time.
    pub edge_ratio: f64,
}

impl<T: Real> Propagator<T> {
    pub fn new(grid: &Grid2D<T>, v_table: &[T], absorber: Option<&Absorber<T>>, dt: T) -> Result<Self> {
        if v_table.len() != grid.len() {
            return Err(Error::invalid(format!(
                "potential table has {} entries, grid has {}",
                v_table.len(),
                grid.len()
            )));
        }
        if let Some(a) = absorber {
            if a.w.len() != grid.len() {
                return Err(Error::invalid("absorber does not match grid"));
            }
        }
        let dtf = dt.as_f64();
        let potential_phase = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let w = absorber.map_or(0.0, |a| a.w[i].as_f64());
                phase_f64(-v_table[i].as_f64() * dtf, w * dtf)
            })
            .collect();
        let inv_n = 1.0 / grid.len() as f64;
        let kin = |k: &[T], tau: f64, scale: f64| -> Vec<Complex<T>> {
            k.iter()
                .map(|&k| {
                    let k = k.as_f64();
                    let c = phase_f64::<f64>(-0.5 * k * k * tau, 0.0) * scale;
                    Complex::new(T::of(c.re), T::of(c.im))
                })
                .collect()
        };
        let interior_edge = match absorber {
            Some(a) if a.strength > T::zero() => interior_edge_ring(grid, a),
            _ => Vec::new(),
        };
        Ok(Self {
            grid: grid.clone(),
            fft: Fft2::new(grid.n_rho, grid.n_z),
            dt,
            potential_phase,
            half_z: kin(&grid.k_z, 0.5 * dtf, 1.0),
            half_rho: kin(&grid.k_rho, 0.5 * dtf, inv_n),
            full_z: kin(&grid.k_z, dtf, 1.0),
            full_rho: kin(&grid.k_rho, dtf, inv_n),
            interior_edge,
        })
    }

    fn kinetic(&self, spec: &mut [Complex<T>], half: bool) {
        let (pz, pr) = if half { (&self.half_z, &self.half_rho) } else { (&self.full_z, &self.full_rho) };
        spec.par_chunks_mut(self.grid.n_rho).zip(pz.par_iter()).for_each(|(row, &cz)| {
            for (s, &cr) in row.iter_mut().zip(pr.iter()) {
                *s = *s * (cz * cr);
            }
        });
    }

    fn potential(&self, psi: &mut [Complex<T>]) {
        psi.par_iter_mut().zip(self.potential_phase.par_iter()).for_each(|(p, &v)| *p = *p * v);
    }

    /// Kinetic factor in place on a position-space field.
    fn kinetic_round_trip(&self, psi: &mut [Complex<T>], spec: &mut [Complex<T>], half: bool) {
        self.fft.forward_to_transposed(psi, spec);
        self.kinetic(spec, half);
        self.fft.inverse_from_transposed(spec, psi);
    }

    /// Runs `n_steps` Strang steps. Adjacent kinetic halves are fused except at
    /// the requested snapshot steps and at the end.
    pub fn run(&self, initial: &WaveField<T>, n_steps: usize, snapshot_steps: &[usize]) -> Result<Propagation<T>> {
        let mut psi = initial.psi.clone();
        let mut spec = vec![Complex::new(T::zero(), T::zero()); psi.len()];
        let row = self.grid.n_z;
        let w = self.grid.cell_area().as_f64();
        let mut norm_history = Vec::with_capacity(n_steps + 1);
        norm_history.push(weighted_norm(&psi, row, w));
        let mut snapshots = Vec::new();
        let snap = |psi: &[Complex<T>], step: usize| WaveField {
            grid: self.grid.clone(),
            psi: psi.to_vec(),
            time: initial.time + T::of_usize(step) * self.dt,
        };
        for _ in snapshot_steps.iter().filter(|&&s| s == 0) {
            snapshots.push(snap(&psi, 0));
        }
        let mut open = false;
        for step in 1..=n_steps {
            if !open {
                self.kinetic_round_trip(&mut psi, &mut spec, true);
            }
            self.potential(&mut psi);
            let norm = weighted_norm(&psi, row, w);
            if !norm.is_finite() {
                return Err(Error::NumericalBlowup { step });
            }
            norm_history.push(norm);
            let wanted = snapshot_steps.iter().filter(|&&s| s == step).count();
            let close = step == n_steps || wanted > 0;
            self.fft.forward_to_transposed(&mut psi, &mut spec);
            self.kinetic(&mut spec, close);
            self.fft.inverse_from_transposed(&mut spec, &mut psi);
            open = !close;
            for _ in 0..wanted {
                snapshots.push(snap(&psi, step));
            }
        }
        let final_field = snap(&psi, n_steps);
        let edge_ratio = self.edge_ratio(&final_field.psi);
        let t_final = T::of_usize(n_steps) * self.dt;
        Ok(Propagation {
            final_field,
            snapshots,
            norm_history,
            n_steps,
            t_final,
            t_final_adjustment: T::zero(),
            edge_ratio,
        })
    }

    fn edge_ratio(&self, psi: &[Complex<T>]) -> f64 {
        if self.interior_edge.is_empty() {
            return 0.0;
        }
        let peak = psi.iter().fold(0.0f64, |m, p| m.max(p.norm_sqr().as_f64()));
        if peak == 0.0 {
            return 0.0;
        }
        let edge = self.interior_edge.iter().fold(0.0f64, |m, &i| m.max(psi[i].norm_sqr().as_f64()));
        edge / peak
    }
}

fn interior_edge_ring<T: Real>(grid: &Grid2D<T>, a: &Absorber<T>) -> Vec<usize> {
    let mut out = Vec::new();
    for ir in 0..grid.n_rho {
        for iz in 0..grid.n_z {
            let i = grid.index(ir, iz);
            if !a.is_interior(i) {
                continue;
            }
            let border = [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dr, dz)| {
                let r = ir as isize + dr;
                let z = iz as isize + dz;
                r < 0
                    || z < 0
                    || r >= grid.n_rho as isize
                    || z >= grid.n_z as isize
                    || !a.is_interior(grid.index(r as usize, z as usize))
            });
            if border {
                out.push(i);
            }
        }
    }
    out
}

/// One Strang step `K/2 V K/2` with `V - iW`.
pub fn split_step<T: Real>(field: &WaveField<T>, v_table: &[T], absorber: Option<&Absorber<T>>, dt: T) -> Result<WaveField<T>> {
    let p = Propagator::new(&field.grid, v_table, absorber, dt)?;
    Ok(p.run(field, 1, &[])?.final_field)
}

fn snapshot_steps<T: Real>(config: &PropagationConfig<T>) -> Result<Vec<usize>> {
    let tf = config.t_final.as_f64();
    let dt = config.dt.as_f64();
    config
        .snapshot_times
        .iter()
        .map(|&t| {
            let t = t.as_f64();
            if !(t >= 0.0 && t <= tf) {
                return Err(Error::invalid(format!("snapshot time {t} outside [0, {tf}]")));
            }
            Ok((t / dt).round() as usize)
        })
        .collect()
}

/// Propagates `initial` under an arbitrary potential table.
pub fn propagate_with_table<T: Real>(initial: &WaveField<T>, v_table: &[T], config: &PropagationConfig<T>) -> Result<Propagation<T>> {
    config.validate()?;
    let steps = snapshot_steps(config)?;
    let absorber = (config.absorber_strength > T::zero())
        .then(|| build_absorber(&initial.grid, config.absorber_width, config.absorber_strength));
    let p = Propagator::new(&initial.grid, v_table, absorber.as_ref(), config.dt)?;
    let mut out = p.run(initial, config.n_steps(), &steps)?;
    out.t_final_adjustment = out.t_final - config.t_final;
    Ok(out)
}

/// Propagates `initial` under the extended pore potential.
pub fn propagate<T: Real>(initial: &WaveField<T>, params: &PotentialParams<T>, config: &PropagationConfig<T>) -> Result<Propagation<T>> {
    let table = sample_extended(&initial.grid, params)?;
    propagate_with_table(initial, &table, config)
}

/// Outcome of [`calibrate_absorber`].
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorberCalibration {
    pub strength: f64,
    /// Largest norm seen back in the interior after the packet entered the band.
    pub returned: f64,
    /// `(strength, returned)` for every rung tried.
    pub ladder: Vec<(f64, f64)>,
}

/// Returned-norm threshold for an accepted absorber.
pub const ABSORBER_TOLERANCE: f64 = 1e-4;
const LADDER: [f64; 9] = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

/// Picks the absorber strength (a multiple of `e0`) that returns the least norm
/// to the interior for a free 1D Gaussian with momentum `p0` fired into the band.
pub fn calibrate_absorber(extent: f64, n: usize, width: f64, p0: f64, e0: f64, dt: f64) -> Result<AbsorberCalibration> {
    if !n.is_power_of_two() || n < 64 {
        return Err(Error::invalid(format!("calibration grid must be a power of two >= 64, got {n}")));
    }
    if !(p0 > 0.0 && e0 > 0.0 && dt > 0.0 && extent > 0.0) {
        return Err(Error::invalid("calibration needs positive p0, e0, dt and extent"));
    }
    let h = extent / n as f64;
    let z: Vec<f64> = (0..n).map(|i| -0.5 * extent + (i as f64 + 0.5) * h).collect();
    let dk = std::f64::consts::TAU / extent;
    let k: Vec<f64> = (0..n).map(|i| if i < n / 2 { i as f64 * dk } else { -((n - i) as f64) * dk }).collect();
    let profile: Vec<f64> = z.iter().map(|&z| edge_profile(z, extent, width)).collect();
    let sigma = 1.0;
    let band_inner = 0.5 * extent - width * extent;
    let t_clear = (band_inner + 6.0 * sigma) / p0;
    let t_end = t_clear + (2.0 * width * extent + 0.5 * extent) / p0;
    let n_steps = (t_end / dt).ceil() as usize;

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let kin: Vec<Complex<f64>> = k.iter().map(|&k| Complex::from_polar(1.0 / n as f64, -0.5 * k * k * dt)).collect();

    let ladder: Vec<(f64, f64)> = LADDER
        .par_iter()
        .map(|&m| {
            let strength = m * e0;
            let decay: Vec<f64> = profile.iter().map(|&f| (-strength * f * dt).exp()).collect();
            let mut psi: Vec<Complex<f64>> = z
                .iter()
                .map(|&z| Complex::from_polar((-(z * z) / (4.0 * sigma * sigma)).exp(), p0 * z))
                .collect();
            let norm0: f64 = psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * h;
            psi.iter_mut().for_each(|p| *p /= norm0.sqrt());
            let mut returned = 0.0f64;
            for step in 1..=n_steps {
                fwd.process(&mut psi);
                psi.iter_mut().zip(kin.iter()).for_each(|(p, c)| *p *= c);
                inv.process(&mut psi);
                psi.iter_mut().zip(decay.iter()).for_each(|(p, d)| *p *= d);
                if step as f64 * dt >= t_clear {
                    let interior: f64 = psi
                        .iter()
                        .zip(profile.iter())
                        .filter(|(_, &f)| f == 0.0)
                        .map(|(p, _)| p.norm_sqr())
                        .sum::<f64>()
                        * h;
                    returned = returned.max(interior);
                }
            }
            (strength, returned)
        })
        .collect();
    let &(strength, returned) = ladder
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("ladder is non-empty");
    if returned >= ABSORBER_TOLERANCE {
        return Err(Error::NotConverged(format!(
            "best absorber strength {strength} returns {returned:.3e} of the norm"
        )));
    }
    Ok(AbsorberCalibration { strength, returned, ladder })
}
