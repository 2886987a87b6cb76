//! A single 2D propagation from a resolved configuration.

use std::time::Instant;

use log::warn;
use qrefl::analysis::{reflectivity_momentum, reflectivity_position};
use qrefl::field::{gaussian_packet, make_grid};
use qrefl::propagator::{calibrate_absorber, propagate};
use qrefl::{PotentialParams, Propagation, PropagationConfig};

use crate::config::Config;
use crate::error::Result;

/// Points of the 1D grid used to calibrate the absorber.
pub const CALIBRATION_POINTS: usize = 4096;
/// Interior-edge density threshold, relative to the peak, at the final time.
pub const EDGE_GUARD: f64 = 1e-6;

/// Everything one propagation needs, in natural units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub d: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub n_rho: usize,
    pub n_z: usize,
    pub extent: f64,
    pub dt: f64,
    pub t_final: f64,
    pub sigma: f64,
    pub r: f64,
    pub p0: f64,
    pub c3: f64,
    pub absorber_width: f64,
    pub absorber_strength: f64,
    pub invert_hole_continuation: bool,
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub r_pos: f64,
    pub r_mom: f64,
    pub norm_final: f64,
    pub runtime_s: f64,
    pub edge_ratio: f64,
    pub propagation: Propagation,
}

/// The absorber strength from the config, or a calibrated one.
pub fn absorber_strength(cfg: &Config) -> Result<f64> {
    if let Some(s) = cfg.propagation.absorber_strength {
        return Ok(s);
    }
    let k = cfg.kinetics()?;
    let cal = calibrate_absorber(
        cfg.grid.extent_um,
        CALIBRATION_POINTS,
        cfg.propagation.absorber_width,
        k.p0,
        k.e0,
        cfg.propagation.dt,
    )?;
    log::info!("absorber calibrated to {} (returned norm {:.2e})", cal.strength, cal.returned);
    Ok(cal.strength)
}

impl RunSpec {
    pub fn new(cfg: &Config, d: f64, theta: f64, absorber_strength: f64) -> Result<Self> {
        Ok(Self {
            d,
            theta,
            epsilon: cfg.potential.epsilon_um,
            n_rho: cfg.grid.n_rho,
            n_z: cfg.grid.n_z,
            extent: cfg.grid.extent_um,
            dt: cfg.propagation.dt,
            t_final: cfg.propagation.t_final,
            sigma: cfg.kinematics.sigma_um,
            r: cfg.kinematics.r_um,
            p0: cfg.kinetics()?.p0,
            c3: cfg.c3_natural()?,
            absorber_width: cfg.propagation.absorber_width,
            absorber_strength,
            invert_hole_continuation: cfg.potential.invert_hole_continuation,
            snapshots: cfg.propagation.snapshots.clone(),
        })
    }

    pub fn potential(&self) -> Result<PotentialParams> {
        Ok(PotentialParams::new(self.theta, self.d, self.epsilon, self.c3)?
            .with_inverted_hole_continuation(self.invert_hole_continuation))
    }
}

pub fn simulate(spec: &RunSpec) -> Result<RunOutcome> {
    let start = Instant::now();
    let grid = make_grid((spec.extent, spec.extent), spec.n_rho, spec.n_z, spec.d)?;
    let packet = gaussian_packet(&grid, spec.r, spec.theta, spec.sigma, spec.p0)?;
    let config = PropagationConfig {
        dt: spec.dt,
        t_final: spec.t_final,
        absorber_width: spec.absorber_width,
        absorber_strength: spec.absorber_strength,
        snapshot_times: spec.snapshots.clone(),
    };
    let propagation = propagate(&packet, &spec.potential()?, &config)?;
    let fin = &propagation.final_field;
    let r_pos = reflectivity_position(fin);
    let r_mom = reflectivity_momentum(fin);
    let norm_final = *propagation.norm_history.last().expect("history holds the initial norm");
    if propagation.edge_ratio > EDGE_GUARD {
        warn!(
            "d = {}, theta = {:.4}: interior-edge density {:.2e} of peak at t_final exceeds {EDGE_GUARD:e}",
            spec.d, spec.theta, propagation.edge_ratio
        );
    }
    if propagation.t_final_adjustment != 0.0 {
        warn!("t_final adjusted by {:e} to a whole number of steps", propagation.t_final_adjustment);
    }
    Ok(RunOutcome {
        r_pos,
        r_mom,
        norm_final,
        runtime_s: start.elapsed().as_secs_f64(),
        edge_ratio: propagation.edge_ratio,
        propagation,
    })
}

/// Thread pool sized by `QREFL_WORKERS`, or by the machine when unset.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let n = worker_count()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| crate::error::HarnessError::Config(format!("cannot start {n} workers: {e}")))
}

pub const WORKERS_ENV: &str = "QREFL_WORKERS";

pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(crate::error::HarnessError::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}
