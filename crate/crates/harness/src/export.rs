//! Plot-ready data files: tidy CSV plus gnuplot line and matrix files.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qrefl::potential::{extended_potential, reflection_distance};
use qrefl::{AtomSpec, PotentialParams};

use crate::config::Config;
use crate::convergence::ConvergenceSeries;
use crate::error::{HarnessError, Result};
use crate::sweep::Record;

/// The kinds of figure data `export` can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// `R_norm` against `d`, one line per angle.
    Lines,
    /// `R_norm` over `(d, theta)`.
    Heatmap,
    /// `V_C` on the axis for a few hole diameters.
    PotentialProfile,
    /// `z_R` against incident speed.
    ReflectionDistance,
    /// `R` against `N_z`.
    Convergence,
}

impl std::str::FromStr for Figure {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lines" => Ok(Figure::Lines),
            "heatmap" => Ok(Figure::Heatmap),
            "potential-profile" => Ok(Figure::PotentialProfile),
            "reflection-distance" => Ok(Figure::ReflectionDistance),
            "convergence" => Ok(Figure::Convergence),
            _ => Err(HarnessError::Config(format!(
                "unknown figure {s:?}; expected lines, heatmap, potential-profile, reflection-distance or convergence"
            ))),
        }
    }
}

fn write(path: PathBuf, text: String) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

fn sorted(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let set: BTreeSet<u64> = values.into_iter().map(|x| x.to_bits()).collect();
    let mut v: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// The `(d, theta / pi)` grid a figure needs, validated against `records`.
/// Missing requests default to every value present.
pub fn coverage<'a>(
    records: &'a [Record],
    d_req: Option<&[f64]>,
    theta_req: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>, HashMap<(u64, u64), &'a Record>)> {
    let by_key: HashMap<(u64, u64), &Record> =
        records.iter().map(|r| ((r.row.d.to_bits(), r.theta_over_pi.to_bits()), r)).collect();
    let d = d_req.map_or_else(|| sorted(records.iter().map(|r| r.row.d)), |v| v.to_vec());
    let t = theta_req.map_or_else(|| sorted(records.iter().map(|r| r.theta_over_pi)), |v| v.to_vec());
    if d.is_empty() || t.is_empty() {
        return Err(qrefl::Error::InvalidArgument("figure request has no points".into()).into());
    }
    let mut missing = Vec::new();
    for &th in &t {
        for &dd in &d {
            match by_key.get(&(dd.to_bits(), th.to_bits())) {
                Some(r) if r.row.r_norm.is_some() => {}
                _ => missing.push(format!("(d = {dd} um, theta = {th} pi)")),
            }
        }
    }
    if !missing.is_empty() {
        return Err(qrefl::Error::InvalidArgument(format!(
            "sweep does not cover {} requested point(s): {}",
            missing.len(),
            missing.join(", ")
        ))
        .into());
    }
    Ok((d, t, by_key))
}

fn tidy(d: &[f64], t: &[f64], rows: &HashMap<(u64, u64), &Record>) -> String {
    let mut s = String::from("theta_over_pi,d_um,R_pos,R_mom,R_norm\n");
    for &th in t {
        for &dd in d {
            let r = &rows[&(dd.to_bits(), th.to_bits())].row;
            let _ = writeln!(s, "{th},{dd},{},{},{}", r.r_pos, r.r_mom, r.r_norm.expect("coverage checked"));
        }
    }
    s
}

/// Writes `<stem>.csv` and `<stem>.dat` with one gnuplot data block per angle.
pub fn export_lines(records: &[Record], d: Option<&[f64]>, theta: Option<&[f64]>, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let (d, t, rows) = coverage(records, d, theta)?;
    let mut dat = String::from("# d_um R_norm R_pos; one block per theta, select with `index`\n");
    for (i, &th) in t.iter().enumerate() {
        if i > 0 {
            dat.push_str("\n\n");
        }
        let _ = writeln!(dat, "# theta_over_pi = {th}");
        for &dd in &d {
            let r = &rows[&(dd.to_bits(), th.to_bits())].row;
            let _ = writeln!(dat, "{dd} {} {}", r.r_norm.expect("coverage checked"), r.r_pos);
        }
    }
    Ok(vec![write(dir.join(format!("{stem}.csv")), tidy(&d, &t, &rows))?, write(dir.join(format!("{stem}.dat")), dat)?])
}

/// Writes `<stem>.csv` and a gnuplot `nonuniform matrix` of `R_norm` with `d`
/// along the columns and `theta / pi` down the rows.
pub fn export_heatmap(records: &[Record], d: Option<&[f64]>, theta: Option<&[f64]>, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let (d, t, rows) = coverage(records, d, theta)?;
    let mut mat = String::new();
    let _ = write!(mat, "{}", d.len());
    for dd in &d {
        let _ = write!(mat, " {dd}");
    }
    mat.push('\n');
    for &th in &t {
        let _ = write!(mat, "{th}");
        for &dd in &d {
            let _ = write!(mat, " {}", rows[&(dd.to_bits(), th.to_bits())].row.r_norm.expect("coverage checked"));
        }
        mat.push('\n');
    }
    Ok(vec![
        write(dir.join(format!("{stem}.csv")), tidy(&d, &t, &rows))?,
        write(dir.join(format!("{stem}_matrix.dat")), mat)?,
    ])
}

/// `V_C(0, z)` in natural energy on a log grid in `z` from `z_range.0` to
/// `z_range.1` (µm) for each diameter, as one CSV column per `d`.
pub fn potential_profile(cfg: &Config, theta: f64, d_list: &[f64], z_range: (f64, f64), n: usize) -> Result<String> {
    let (lo, hi) = z_range;
    if !(lo > 0.0 && hi > lo && n >= 2) || d_list.is_empty() {
        return Err(qrefl::Error::InvalidArgument(format!("bad profile range {z_range:?} / {n} points / {} diameters", d_list.len())).into());
    }
    let c3 = cfg.c3_natural()?;
    let params: Vec<PotentialParams> = d_list
        .iter()
        .map(|&d| {
            Ok(PotentialParams::new(theta, d, cfg.potential.epsilon_um, c3)?
                .with_inverted_hole_continuation(cfg.potential.invert_hole_continuation))
        })
        .collect::<Result<_>>()?;
    let mut s = String::from("z_um");
    for d in d_list {
        let _ = write!(s, ",V_C_d{d}um");
    }
    s.push('\n');
    for i in 0..n {
        let z = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        let _ = write!(s, "{z}");
        for p in &params {
            let _ = write!(s, ",{}", extended_potential(0.0, z, p));
        }
        s.push('\n');
    }
    Ok(s)
}

/// `z_R` in nm and the badlands maximum for each speed.
pub fn reflection_distance_table(atom: &AtomSpec, velocities: &[f64]) -> Result<String> {
    let mut s = String::from("atom,v_m_s,z_R_nm,Q_max\n");
    for &v in velocities {
        let r = reflection_distance(atom, v)?;
        let _ = writeln!(s, "{},{v},{},{}", atom.name, r.z * 1e3, r.q_max);
    }
    Ok(s)
}

/// gnuplot blocks of `N_z R_pos running_mean`, one per `(epsilon, d)`.
pub fn convergence_blocks(series: &[ConvergenceSeries]) -> String {
    let mut s = String::from("# N_z R_pos running_mean; one block per (epsilon, d)\n");
    for (i, c) in series.iter().enumerate() {
        if i > 0 {
            s.push_str("\n\n");
        }
        let _ = writeln!(s, "# epsilon_um = {} d_um = {} N_rho = {}", c.epsilon, c.d, c.n_rho);
        for p in &c.points {
            let _ = writeln!(s, "{} {} {}", p.n_z, p.r_pos, p.running_mean);
        }
    }
    s
}

pub fn write_text(dir: &Path, name: &str, text: String) -> Result<PathBuf> {
    write(dir.join(name), text)
}
