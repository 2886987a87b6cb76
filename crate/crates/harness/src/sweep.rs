//! Parameter sweeps over `(d, theta)` with an append-only checkpoint.
//!
//! While a sweep runs, completed rows go to `<out>.partial` (same columns as
//! the final CSV) and `<out>.index` records the recipe hash and failed rows.
//! A rerun with the same recipe reuses every row found in the partial file.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use log::{error, info, warn};
use qrefl::analysis::{normalize_sweep, SweepResult, SweepRow};
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::metadata::recipe_hash;
use crate::run::{absorber_strength, simulate, RunSpec};

pub const REQUIRED_COLUMNS: [&str; 10] = [
    "d_um",
    "theta_over_pi",
    "N_rho",
    "N_z",
    "epsilon_um",
    "R_pos",
    "R_mom",
    "R_norm",
    "norm_final",
    "runtime_s",
];

pub const RECIPE_COLUMNS: [&str; 10] = [
    "atom",
    "v_m_s",
    "dt",
    "t_final",
    "sigma_um",
    "r_um",
    "absorber_strength",
    "invert_hole_continuation",
    "edge_ratio",
    "recipe_hash",
];

pub fn csv_header() -> String {
    REQUIRED_COLUMNS.iter().chain(RECIPE_COLUMNS.iter()).copied().collect::<Vec<_>>().join(",")
}

/// One finished propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub theta_over_pi: f64,
    pub row: SweepRow,
    pub sigma: f64,
    pub r: f64,
    pub absorber_strength: f64,
    pub invert_hole_continuation: bool,
    pub edge_ratio: f64,
    pub recipe_hash: String,
}

impl Record {
    fn key(&self) -> (u64, u64) {
        (self.row.d.to_bits(), self.theta_over_pi.to_bits())
    }

    pub fn to_csv(&self) -> String {
        let w = &self.row;
        let r_norm = w.r_norm.map_or(String::new(), |x| x.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            w.d,
            self.theta_over_pi,
            w.n_rho,
            w.n_z,
            w.epsilon,
            w.r_pos,
            w.r_mom,
            r_norm,
            w.norm_final,
            w.runtime_s,
            w.atom,
            w.v,
            w.dt,
            w.t_final,
            self.sigma,
            self.r,
            self.absorber_strength,
            self.invert_hole_continuation,
            self.edge_ratio,
            self.recipe_hash
        )
    }

    pub fn from_csv(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
        if f.len() != REQUIRED_COLUMNS.len() + RECIPE_COLUMNS.len() {
            return None;
        }
        let num = |i: usize| f[i].parse::<f64>().ok();
        let theta_over_pi = num(1)?;
        let row = SweepRow {
            atom: f[10].to_string(),
            v: num(11)?,
            d: num(0)?,
            theta: theta_over_pi * std::f64::consts::PI,
            n_rho: f[2].parse().ok()?,
            n_z: f[3].parse().ok()?,
            epsilon: num(4)?,
            dt: num(12)?,
            t_final: num(13)?,
            r_pos: num(5)?,
            r_mom: num(6)?,
            r_norm: if f[7].is_empty() { None } else { Some(num(7)?) },
            norm_final: num(8)?,
            runtime_s: num(9)?,
        };
        Some(Self {
            theta_over_pi,
            row,
            sigma: num(14)?,
            r: num(15)?,
            absorber_strength: num(16)?,
            invert_hole_continuation: f[17].parse().ok()?,
            edge_ratio: num(18)?,
            recipe_hash: f[19].to_string(),
        })
    }
}

/// Reads a sweep CSV written by [`run_sweep`].
pub fn read_csv(path: &Path) -> Result<Vec<Record>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == csv_header() => {}
        _ => return Err(HarnessError::Config(format!("{}: not a sweep CSV (header mismatch)", path.display()))),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            Record::from_csv(l).ok_or_else(|| HarnessError::Config(format!("{}: bad row {}", path.display(), i + 2)))
        })
        .collect()
}

pub fn write_csv(path: &Path, records: &[Record]) -> Result<()> {
    let mut text = csv_header();
    text.push('\n');
    for r in records {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub d: f64,
    pub theta_over_pi: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Sorted by `theta_over_pi`, then `d`.
    pub records: Vec<Record>,
    pub failures: Vec<Failure>,
    /// Rows taken from the checkpoint instead of being recomputed.
    pub resumed: usize,
    pub total: usize,
}

impl SweepOutcome {
    pub fn result(&self) -> SweepResult {
        SweepResult { rows: self.records.iter().map(|r| r.row.clone()).collect() }
    }

    /// `HarnessError::Partial` when any row failed.
    pub fn check(&self) -> Result<()> {
        if self.failures.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Partial { failed: self.failures.len(), total: self.total })
        }
    }
}

fn sidecar(out: &Path, ext: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

pub fn partial_path(out: &Path) -> PathBuf {
    sidecar(out, ".partial")
}

pub fn index_path(out: &Path) -> PathBuf {
    sidecar(out, ".index")
}

/// Rows already present in a checkpoint for this recipe.
fn load_checkpoint(out: &Path, hash: &str) -> Result<Vec<Record>> {
    let (partial, index) = (partial_path(out), index_path(out));
    if !index.exists() {
        return Ok(Vec::new());
    }
    let idx = fs::read_to_string(&index).map_err(|e| HarnessError::io(&index, e))?;
    let stored = idx.lines().next().and_then(|l| l.strip_prefix("recipe ")).unwrap_or("");
    if stored != hash {
        return Err(HarnessError::Config(format!(
            "checkpoint {} belongs to a different recipe ({stored}); remove it or change the output path",
            index.display()
        )));
    }
    let text = match fs::read_to_string(&partial) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(HarnessError::io(&partial, e)),
    };
    // a torn final line from an interrupted write does not parse and is redone
    Ok(text.lines().skip(1).filter_map(Record::from_csv).filter(|r| r.recipe_hash == hash).collect())
}

fn start_checkpoint(out: &Path, hash: &str, kept: &[Record]) -> Result<(BufWriter<File>, BufWriter<File>)> {
    let (partial, index) = (partial_path(out), index_path(out));
    let mut text = csv_header();
    text.push('\n');
    for r in kept {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    fs::write(&partial, text).map_err(|e| HarnessError::io(&partial, e))?;
    fs::write(&index, format!("recipe {hash}\n")).map_err(|e| HarnessError::io(&index, e))?;
    let open = |p: &Path| -> Result<BufWriter<File>> {
        OpenOptions::new().append(true).open(p).map(BufWriter::new).map_err(|e| HarnessError::io(p, e))
    };
    Ok((open(&partial)?, open(&index)?))
}

/// Adds `d = 0` if missing and removes duplicates, keeping the given order.
pub fn sweep_axes(d_list: &[f64], theta_list: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if d_list.is_empty() || theta_list.is_empty() {
        return Err(HarnessError::Config("sweep lists must not be empty".into()));
    }
    if let Some(x) = d_list.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(HarnessError::Config(format!("hole diameter {x} must be finite and >= 0")));
    }
    let mut seen = HashSet::new();
    let mut d: Vec<f64> = d_list.iter().copied().filter(|x| seen.insert(x.to_bits())).collect();
    if !d.contains(&0.0) {
        warn!("d = 0 is missing from the sweep; adding it as the normalisation baseline");
        d.insert(0, 0.0);
    }
    let mut seen = HashSet::new();
    let t = theta_list.iter().copied().filter(|x| seen.insert(x.to_bits())).collect();
    Ok((d, t))
}

/// Runs every `(d, theta / pi)` pair on `pool`, checkpointing next to `out`, and
/// writes the normalised CSV to `out`.
///
/// Failed rows are listed in the outcome; the first row error is returned only
/// when every row failed.
pub fn run_sweep(
    cfg: &Config,
    d_list: &[f64],
    theta_over_pi: &[f64],
    out: &Path,
    pool: &rayon::ThreadPool,
) -> Result<SweepOutcome> {
    cfg.validate()?;
    let (d_list, theta_list) = sweep_axes(d_list, theta_over_pi)?;
    if let Some(t) = theta_list.iter().find(|t| !(0.0..=0.5).contains(*t)) {
        return Err(HarnessError::Config(format!("theta / pi = {t} outside [0, 0.5]")));
    }
    let hash = recipe_hash(cfg);
    let strength = absorber_strength(cfg)?;

    let kept = load_checkpoint(out, &hash)?;
    let done: HashSet<_> = kept.iter().map(Record::key).collect();
    let mut todo = Vec::new();
    for &t in &theta_list {
        for &d in &d_list {
            if !done.contains(&(d.to_bits(), t.to_bits())) {
                todo.push((d, t));
            }
        }
    }
    let wanted: HashSet<_> = theta_list
        .iter()
        .flat_map(|t| d_list.iter().map(move |d| (d.to_bits(), t.to_bits())))
        .collect();
    let resumed = kept.iter().filter(|r| wanted.contains(&r.key())).count();
    if resumed > 0 {
        info!("resuming: {resumed} rows taken from the checkpoint, {} to run", todo.len());
    }
    let (mut partial, mut index) = start_checkpoint(out, &hash, &kept)?;

    let atom = cfg.atom_spec()?.name;
    let (tx, rx) = mpsc::channel::<(f64, f64, Result<Record>)>();
    let mut fresh = Vec::new();
    let mut failures = Vec::new();
    let mut write_err = None;
    std::thread::scope(|s| {
        s.spawn(|| {
            let tx = tx;
            pool.install(|| {
                todo.par_iter().for_each_with(tx, |tx, &(d, t)| {
                    let rec = compute_row(cfg, &atom, d, t, strength, &hash);
                    let _ = tx.send((d, t, rec));
                });
            });
        });
        for (d, t, rec) in rx {
            match rec {
                Ok(rec) => {
                    let line = rec.to_csv();
                    if let Err(e) = writeln!(partial, "{line}").and_then(|_| partial.flush()) {
                        write_err.get_or_insert(HarnessError::io(partial_path(out), e));
                    }
                    fresh.push(rec);
                }
                Err(e) => {
                    error!("row d = {d}, theta/pi = {t} failed: {e}");
                    let msg = e.to_string().replace('\n', " ");
                    if let Err(e) = writeln!(index, "failed {d} {t} {msg}").and_then(|_| index.flush()) {
                        write_err.get_or_insert(HarnessError::io(index_path(out), e));
                    }
                    failures.push((Failure { d, theta_over_pi: t, message: msg }, e));
                }
            }
        }
    });
    if let Some(e) = write_err {
        return Err(e);
    }

    let mut rows: BTreeMap<(u64, u64), Record> = BTreeMap::new();
    for r in kept.into_iter().chain(fresh) {
        if wanted.contains(&r.key()) {
            rows.insert(r.key(), r);
        }
    }
    if rows.is_empty() {
        let (_, first) = failures.into_iter().next().expect("no rows and no failures means nothing was requested");
        return Err(first);
    }
    let mut records: Vec<Record> = rows.into_values().collect();
    records.sort_by(|a, b| a.theta_over_pi.total_cmp(&b.theta_over_pi).then(a.row.d.total_cmp(&b.row.d)));
    normalise(&mut records);
    write_csv(out, &records)?;

    let failures: Vec<Failure> = failures.into_iter().map(|(f, _)| f).collect();
    if failures.is_empty() {
        let _ = fs::remove_file(partial_path(out));
        let _ = fs::remove_file(index_path(out));
    } else {
        warn!("{} of {} rows failed; the checkpoint is kept for a rerun", failures.len(), wanted.len());
    }
    Ok(SweepOutcome { records, failures, resumed, total: wanted.len() })
}

/// Normalises each theta group that has its baseline; the rest keep an empty `R_norm`.
fn normalise(records: &mut [Record]) {
    let with_base: HashSet<u64> =
        records.iter().filter(|r| r.row.d == 0.0).map(|r| r.theta_over_pi.to_bits()).collect();
    let rows: Vec<SweepRow> =
        records.iter().filter(|r| with_base.contains(&r.theta_over_pi.to_bits())).map(|r| r.row.clone()).collect();
    let normed = normalize_sweep(SweepResult { rows }).expect("every group kept here has a baseline");
    let mut it = normed.rows.into_iter();
    for r in records.iter_mut() {
        if with_base.contains(&r.theta_over_pi.to_bits()) {
            r.row.r_norm = it.next().expect("same length").r_norm;
        } else {
            warn!("theta/pi = {}: baseline failed, R_norm left empty", r.theta_over_pi);
            r.row.r_norm = None;
        }
    }
}

fn compute_row(cfg: &Config, atom: &str, d: f64, theta_over_pi: f64, strength: f64, hash: &str) -> Result<Record> {
    let theta = theta_over_pi * std::f64::consts::PI;
    let spec = RunSpec::new(cfg, d, theta, strength)?;
    let out = simulate(&spec)?;
    let p = &out.propagation;
    Ok(Record {
        theta_over_pi,
        row: SweepRow {
            atom: atom.to_string(),
            v: cfg.kinematics.velocity_m_s,
            d,
            theta,
            n_rho: spec.n_rho,
            n_z: spec.n_z,
            epsilon: spec.epsilon,
            dt: spec.dt,
            t_final: p.t_final,
            r_pos: out.r_pos,
            r_mom: out.r_mom,
            r_norm: None,
            norm_final: out.norm_final,
            runtime_s: out.runtime_s,
        },
        sigma: spec.sigma,
        r: spec.r,
        absorber_strength: strength,
        invert_hole_continuation: spec.invert_hole_continuation,
        edge_ratio: out.edge_ratio,
        recipe_hash: hash.to_string(),
    })
}

/// Renders failures as `d_um,theta_over_pi,message` lines.
pub fn failure_report(failures: &[Failure]) -> String {
    let mut s = String::from("d_um,theta_over_pi,message\n");
    for f in failures {
        let _ = writeln!(s, "{},{},{}", f.d, f.theta_over_pi, f.message.replace(',', ";"));
    }
    s
}
