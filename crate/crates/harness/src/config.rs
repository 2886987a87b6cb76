//! Run configuration: a TOML file with `[atom]`, `[kinematics]`, `[grid]`,
//! `[potential]`, `[propagation]` and `[sweep]` sections. CLI flags override it.

use std::path::Path;

use qrefl::units::{kinetic_params, natural_units, KineticParams, UnitSystem, MICROMETRE};
use qrefl::AtomSpec;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_amu: Option<f64>,
    #[serde(rename = "C3_J", default, skip_serializing_if = "Option::is_none")]
    pub c3_j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_nm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KinematicsSection {
    /// Incident speed, m/s.
    pub velocity_m_s: f64,
    /// Standard deviation of the initial density, µm.
    pub sigma_um: f64,
    /// Start distance from the origin, µm.
    pub r_um: f64,
}

impl Default for KinematicsSection {
    fn default() -> Self {
        Self { velocity_m_s: 2.0, sigma_um: 1.0, r_um: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub extent_um: f64,
    pub n_rho: usize,
    pub n_z: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { extent_um: 25.0, n_rho: 2048, n_z: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    pub epsilon_um: f64,
    /// Continue the potential below the cut-off with the quadratic branch
    /// outside the hole rather than inside it.
    pub invert_hole_continuation: bool,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self { epsilon_um: 0.01, invert_hole_continuation: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationSection {
    pub dt: f64,
    pub t_final: f64,
    pub absorber_width: f64,
    /// Natural energy. Calibrated from the incident kinematics when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorber_strength: Option<f64>,
    pub snapshots: Vec<f64>,
}

impl Default for PropagationSection {
    fn default() -> Self {
        Self { dt: 0.005, t_final: 0.21, absorber_width: 0.10, absorber_strength: None, snapshots: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub d_um: Vec<f64>,
    pub theta_over_pi: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            d_um: (0..=12).map(f64::from).collect(),
            theta_over_pi: (0..=9).map(|i| f64::from(i) * 0.05).map(round_tick).collect(),
        }
    }
}

fn round_tick(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub atom: AtomSection,
    #[serde(default)]
    pub kinematics: KinematicsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub propagation: PropagationSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    /// ³He at 2 m/s. The run length is cut to 0.085 so the reflected packet is
    /// still inside the absorber frame when it is measured, and the cut-off is
    /// 10 nm.
    pub fn helium3() -> Self {
        Self {
            atom: AtomSection { name: "He3".into(), mass_amu: None, c3_j: None, lambda_nm: None },
            kinematics: KinematicsSection::default(),
            grid: GridSection::default(),
            potential: PotentialSection { epsilon_um: 0.01, invert_hole_continuation: true },
            propagation: PropagationSection { t_final: 0.085, ..PropagationSection::default() },
            sweep: SweepSection::default(),
        }
    }

    /// Sodium at 0.1 m/s with a 100 nm cut-off. `C3` has no built-in value.
    pub fn sodium(c3_j: f64) -> Self {
        Self {
            atom: AtomSection { name: "Na".into(), mass_amu: None, c3_j: Some(c3_j), lambda_nm: None },
            kinematics: KinematicsSection { velocity_m_s: 0.1, ..KinematicsSection::default() },
            grid: GridSection::default(),
            potential: PotentialSection { epsilon_um: 0.1, invert_hole_continuation: true },
            propagation: PropagationSection::default(),
            sweep: SweepSection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.atom_spec()?.require_c3()?;
        let bad = |m: String| Err(HarnessError::Config(m));
        let k = &self.kinematics;
        if !(k.velocity_m_s > 0.0 && k.sigma_um > 0.0 && k.r_um >= 0.0) {
            return bad(format!("kinematics need velocity > 0, sigma > 0, r >= 0: {k:?}"));
        }
        let g = &self.grid;
        if !(g.extent_um > 0.0) || !g.n_rho.is_power_of_two() || !g.n_z.is_power_of_two() || g.n_rho < 64 || g.n_z < 64 {
            return bad(format!("grid needs positive extent and power-of-two sizes >= 64: {g:?}"));
        }
        if !(self.potential.epsilon_um > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.potential.epsilon_um));
        }
        let p = &self.propagation;
        if !(p.dt > 0.0 && p.t_final >= p.dt && p.absorber_width > 0.0 && p.absorber_width < 0.5) {
            return bad(format!("propagation settings out of range: {p:?}"));
        }
        if p.absorber_strength.is_some_and(|s| !(s >= 0.0)) {
            return bad("absorber strength must be >= 0".into());
        }
        let s = &self.sweep;
        if s.d_um.iter().any(|&d| !(d >= 0.0)) {
            return bad("hole diameters must be >= 0".into());
        }
        if s.theta_over_pi.iter().any(|&t| !(0.0..=0.5).contains(&t)) {
            return bad("theta / pi must lie in [0, 0.5]".into());
        }
        Ok(())
    }

    /// Catalog entry for the atom name, with any field given in the file taking
    /// precedence. Unknown atoms need `mass_amu` and `C3_J`.
    pub fn atom_spec(&self) -> Result<AtomSpec> {
        let a = &self.atom;
        let base = AtomSpec::from_catalog(&a.name);
        let mass = a.mass_amu.or(base.as_ref().map(|b| b.mass_amu)).ok_or_else(|| {
            HarnessError::Config(format!("atom {} is not in the catalog; give mass_amu", a.name))
        })?;
        let c3 = a.c3_j.or(base.as_ref().and_then(|b| b.c3));
        let lambda = a.lambda_nm.map(|l| l * 1e-9).or(base.as_ref().and_then(|b| b.lambda_transition));
        let name = base.map_or_else(|| a.name.clone(), |b| b.name);
        Ok(AtomSpec::new(name, mass, c3, lambda)?)
    }

    pub fn units(&self) -> Result<UnitSystem> {
        Ok(natural_units(&self.atom_spec()?, MICROMETRE)?)
    }

    pub fn kinetics(&self) -> Result<KineticParams> {
        Ok(kinetic_params(self.kinematics.velocity_m_s, &self.units()?)?)
    }

    pub fn c3_natural(&self) -> Result<f64> {
        let atom = self.atom_spec()?;
        Ok(self.units()?.c3_to_natural(atom.require_c3()?))
    }
}

/// Parses an angle given in radians (`0.63`) or as a multiple of pi (`0.2pi`, `pi/4`).
pub fn parse_theta(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase().replace('π', "pi");
    let err = || HarnessError::Config(format!("cannot parse angle {s:?}"));
    let value = if let Some(rest) = t.strip_prefix("pi/") {
        std::f64::consts::PI / rest.trim().parse::<f64>().map_err(|_| err())?
    } else if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*');
        let mult = if head.is_empty() { 1.0 } else { head.parse::<f64>().map_err(|_| err())? };
        mult * std::f64::consts::PI
    } else {
        t.parse::<f64>().map_err(|_| err())?
    };
    if !value.is_finite() {
        return Err(err());
    }
    Ok(value)
}

/// Comma-separated list of angles in [`parse_theta`] syntax.
pub fn parse_theta_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_theta).collect()
}
