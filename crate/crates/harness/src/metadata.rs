//! Run metadata records written next to every output.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{HarnessError, Result};

/// Content hash in the style of a git blob object: SHA-256 over
/// `"blob <len>\0" + content`, hex encoded.
pub fn content_hash(content: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content.as_bytes());
    hex::encode(h.finalize())
}

/// Hash of the canonical TOML of the whole config.
pub fn config_hash(cfg: &Config) -> String {
    content_hash(&cfg.to_toml())
}

/// Hash of everything that determines a single sweep row. The sweep axes are
/// left out so a sweep can be extended and still reuse its checkpoint.
pub fn recipe_hash(cfg: &Config) -> String {
    let mut c = cfg.clone();
    c.sweep.d_um.clear();
    c.sweep.theta_over_pi.clear();
    content_hash(&c.to_toml())
}

#[derive(Debug, Clone, Serialize)]
pub struct Software {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Platform {
    pub os: &'static str,
    pub arch: &'static str,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Units {
    pub length_m: f64,
    pub energy_j: f64,
    pub energy_nev: f64,
    pub time_s: f64,
    pub velocity_m_s: f64,
    pub e0_natural: f64,
    pub p0_natural: f64,
    pub c3_natural: f64,
    pub t_final_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub command: String,
    pub software: Software,
    pub platform: Platform,
    pub config_hash: String,
    pub recipe_hash: String,
    pub config: Config,
    pub units: Units,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

/// Convention notes carried by every record.
pub fn convention_notes(cfg: &Config) -> Vec<String> {
    let mut notes = vec![
        "dimensionless (natural-unit) inputs are authoritative; SI values are derived from them".to_string(),
        "the reference helium table quotes E0 = 1.13e5 natural (1.56 ueV), which is v ~ 10 m/s; the sweeps use v = 2 m/s".into(),
        "the reference table's SI time values do not match t_final = 0.21 natural; t_final_s here is computed from the natural value".into(),
        "the reference reports eps = 10 nm as the lowest convergent cut-off while its helium table lists 1 nm; both are accepted".into(),
        "default sweep ticks d = 0..12 um and theta = 0..0.45 pi are choices approximating the plotted ranges".into(),
    ];
    if cfg.potential.invert_hole_continuation {
        notes.push("below the cut-off the quadratic continuation is used outside the hole and the shifted image branch inside it".into());
    }
    if cfg.propagation.absorber_strength.is_none() {
        notes.push("absorber strength calibrated from a 1D free packet".into());
    }
    notes
}

impl Metadata {
    pub fn new(command: &str, cfg: &Config, extra: serde_json::Value) -> Result<Self> {
        let u = cfg.units()?;
        let k = cfg.kinetics()?;
        Ok(Self {
            command: command.to_string(),
            software: Software { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") },
            platform: Platform {
                os: std::env::consts::OS,
                arch: std::env::consts::ARCH,
                workers: crate::run::worker_count().unwrap_or(1),
            },
            config_hash: config_hash(cfg),
            recipe_hash: recipe_hash(cfg),
            config: cfg.clone(),
            units: Units {
                length_m: u.length,
                energy_j: u.energy,
                energy_nev: u.energy_unit_nev(),
                time_s: u.time,
                velocity_m_s: u.velocity,
                e0_natural: k.e0,
                p0_natural: k.p0,
                c3_natural: cfg.c3_natural()?,
                t_final_s: u.time_to_si(cfg.propagation.t_final),
            },
            notes: convention_notes(cfg),
            extra,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("metadata is serialisable");
        std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
    }
}
