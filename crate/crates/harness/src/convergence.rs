//! Grid-convergence studies: `R` against `N_z` at fixed `N_rho`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::run::{absorber_strength, simulate, RunSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint {
    pub n_z: usize,
    pub r_pos: f64,
    /// Mean of `r_pos` over this and all coarser `N_z`.
    pub running_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    pub epsilon: f64,
    pub d: f64,
    pub n_rho: usize,
    pub points: Vec<ConvergencePoint>,
}

impl ConvergenceSeries {
    fn spread(points: &[ConvergencePoint]) -> f64 {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.r_pos), hi.max(p.r_pos)));
        hi - lo
    }

    /// `max - min` of `R` over the three largest `N_z`.
    pub fn amplitude_fine(&self) -> f64 {
        Self::spread(&self.points[self.points.len().saturating_sub(3)..])
    }

    /// `max - min` of `R` over the three smallest `N_z`.
    pub fn amplitude_coarse(&self) -> f64 {
        Self::spread(&self.points[..self.points.len().min(3)])
    }
}

/// One series per `(epsilon, d)` at `theta`, in the order the lists are given.
pub fn convergence_study(
    cfg: &Config,
    theta: f64,
    d_list: &[f64],
    epsilon_list: &[f64],
    nz_list: &[usize],
    n_rho: usize,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ConvergenceSeries>> {
    if d_list.is_empty() || epsilon_list.is_empty() || nz_list.is_empty() {
        return Err(HarnessError::Config("convergence lists must not be empty".into()));
    }
    if nz_list.iter().any(|n| !n.is_power_of_two()) || nz_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Config(format!("N_z list must be ascending powers of two: {nz_list:?}")));
    }
    let mut base = cfg.clone();
    base.grid.n_rho = n_rho;
    base.grid.n_z = nz_list[0];
    base.validate()?;
    let strength = absorber_strength(&base)?;

    let jobs: Vec<(f64, f64, usize)> = epsilon_list
        .iter()
        .flat_map(|&e| d_list.iter().flat_map(move |&d| nz_list.iter().map(move |&n| (e, d, n))))
        .collect();
    let results: Vec<Result<f64>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(eps, d, n_z)| {
                let mut c = base.clone();
                c.potential.epsilon_um = eps;
                c.grid.n_z = n_z;
                c.validate()?;
                let spec = RunSpec::new(&c, d, theta, strength)?;
                Ok(simulate(&spec)?.r_pos)
            })
            .collect()
    });
    let mut it = results.into_iter();
    let mut series = Vec::new();
    for &epsilon in epsilon_list {
        for &d in d_list {
            let mut points: Vec<ConvergencePoint> = Vec::with_capacity(nz_list.len());
            let mut sum = 0.0;
            for (i, &n_z) in nz_list.iter().enumerate() {
                let r_pos = it.next().expect("one result per job")?;
                sum += r_pos;
                points.push(ConvergencePoint { n_z, r_pos, running_mean: sum / (i + 1) as f64 });
            }
            series.push(ConvergenceSeries { epsilon, d, n_rho, points });
        }
    }
    Ok(series)
}

pub const CONVERGENCE_HEADER: &str =
    "epsilon_um,d_um,N_rho,N_z,R_pos,running_mean,amplitude_coarse,amplitude_fine";

pub fn convergence_csv(series: &[ConvergenceSeries]) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for c in series {
        let (ac, af) = (c.amplitude_coarse(), c.amplitude_fine());
        for p in &c.points {
            let _ = writeln!(s, "{},{},{},{},{},{},{},{}", c.epsilon, c.d, c.n_rho, p.n_z, p.r_pos, p.running_mean, ac, af);
        }
    }
    s
}

/// Parses [`convergence_csv`] output back into series.
pub fn parse_convergence_csv(text: &str) -> Result<Vec<ConvergenceSeries>> {
    let mut lines = text.lines();
    if lines.next() != Some(CONVERGENCE_HEADER) {
        return Err(HarnessError::Config("not a convergence CSV (header mismatch)".into()));
    }
    let mut out: Vec<ConvergenceSeries> = Vec::new();
    for (i, l) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = l.split(',').collect();
        let bad = || HarnessError::Config(format!("convergence CSV: bad row {}", i + 2));
        if f.len() != 8 {
            return Err(bad());
        }
        let num = |j: usize| f[j].parse::<f64>().map_err(|_| bad());
        let (epsilon, d) = (num(0)?, num(1)?);
        let n_rho = f[2].parse().map_err(|_| bad())?;
        let p = ConvergencePoint { n_z: f[3].parse().map_err(|_| bad())?, r_pos: num(4)?, running_mean: num(5)? };
        match out.last_mut() {
            Some(c) if c.epsilon == epsilon && c.d == d && c.n_rho == n_rho => c.points.push(p),
            _ => out.push(ConvergenceSeries { epsilon, d, n_rho, points: vec![p] }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(r: &[f64]) -> ConvergenceSeries {
        let mut sum = 0.0;
        ConvergenceSeries {
            epsilon: 0.001,
            d: 0.0,
            n_rho: 128,
            points: r
                .iter()
                .enumerate()
                .map(|(i, &r_pos)| {
                    sum += r_pos;
                    ConvergencePoint { n_z: 2048 << i, r_pos, running_mean: sum / (i + 1) as f64 }
                })
                .collect(),
        }
    }

    #[test]
    fn amplitudes_over_ends() {
        let s = series(&[0.1, 0.3, 0.2, 0.22, 0.21]);
        assert!((s.amplitude_coarse() - 0.2).abs() < 1e-15);
        assert!((s.amplitude_fine() - 0.02).abs() < 1e-15);
        assert!((s.points[1].running_mean - 0.2).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let a = vec![series(&[0.1, 0.3, 0.2]), ConvergenceSeries { d: 4.0, ..series(&[0.5, 0.4]) }];
        let back = parse_convergence_csv(&convergence_csv(&a)).unwrap();
        assert_eq!(a, back);
    }
}
