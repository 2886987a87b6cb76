//! Atoms, the natural unit system and incident kinematics.
//!
//! Natural units set `hbar = m = 1` for the atom's mass `m` and measure lengths
//! in a chosen scale `L` (1 µm by default). Every SI conversion in the crate
//! goes through [`UnitSystem`].

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (exact SI definition of h divided by 2π).
pub const HBAR: f64 = 1.054_571_817_646_156_4e-34;
/// Atomic mass constant, kg (CODATA 2018).
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Electron volt, J (exact).
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m (CODATA 2018).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Default length scale, m.
pub const MICROMETRE: f64 = 1e-6;

/// An atomic species and its dispersion coefficient against the plate.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    pub name: String,
    pub mass_kg: f64,
    pub mass_amu: f64,
    /// Non-retarded dispersion coefficient in J·m³. `None` until supplied.
    pub c3: Option<f64>,
    /// Dominant transition wavelength, m.
    pub lambda_transition: Option<f64>,
}

impl AtomSpec {
    pub fn new(name: impl Into<String>, mass_amu: f64, c3: Option<f64>, lambda_transition: Option<f64>) -> Result<Self> {
        if !(mass_amu > 0.0) || !mass_amu.is_finite() {
            return Err(Error::invalid(format!("atom mass must be positive, got {mass_amu} amu")));
        }
        if let Some(c) = c3 {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::invalid(format!("C3 must be positive, got {c} J m^3")));
            }
        }
        Ok(Self {
            name: name.into(),
            mass_kg: mass_amu * AMU,
            mass_amu,
            c3,
            lambda_transition,
        })
    }

    /// ³He against a gold plate.
    pub fn helium3() -> Self {
        Self::new("He3", 3.016, Some(4.0e-50), Some(9.3e-9)).expect("catalog entry is valid")
    }

    /// Sodium. The dispersion coefficient has to be supplied with [`AtomSpec::with_c3`].
    pub fn sodium() -> Self {
        Self::new("Na", 22.99, None, Some(590e-9)).expect("catalog entry is valid")
    }

    /// Looks up a built-in species by (case-insensitive) name.
    pub fn from_catalog(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "he3" | "3he" | "helium3" | "helium-3" => Some(Self::helium3()),
            "na" | "sodium" => Some(Self::sodium()),
            _ => None,
        }
    }

    pub fn with_c3(mut self, c3: f64) -> Result<Self> {
        if !(c3 > 0.0) || !c3.is_finite() {
            return Err(Error::invalid(format!("C3 must be positive, got {c3} J m^3")));
        }
        self.c3 = Some(c3);
        Ok(self)
    }

    pub fn require_c3(&self) -> Result<f64> {
        self.c3
            .ok_or_else(|| Error::invalid(format!("atom {} has no C3 coefficient; supply it in the config", self.name)))
    }
}

/// Conversion factors between SI and natural units for one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub mass_kg: f64,
    /// Length scale `L`, m.
    pub length: f64,
    /// `hbar² / (m L²)`, J.
    pub energy: f64,
    /// `m L² / hbar`, s.
    pub time: f64,
    /// `hbar / (m L)`, m/s.
    pub velocity: f64,
}

impl UnitSystem {
    pub fn energy_to_natural(&self, joules: f64) -> f64 {
        joules / self.energy
    }

    pub fn energy_to_si(&self, natural: f64) -> f64 {
        natural * self.energy
    }

    pub fn length_to_natural(&self, metres: f64) -> f64 {
        metres / self.length
    }

    pub fn length_to_si(&self, natural: f64) -> f64 {
        natural * self.length
    }

    pub fn time_to_natural(&self, seconds: f64) -> f64 {
        seconds / self.time
    }

    pub fn time_to_si(&self, natural: f64) -> f64 {
        natural * self.time
    }

    pub fn velocity_to_natural(&self, metres_per_second: f64) -> f64 {
        metres_per_second / self.velocity
    }

    /// Converts a `C3` coefficient in J·m³ to natural energy × length³.
    pub fn c3_to_natural(&self, c3: f64) -> f64 {
        c3 / (self.energy * self.length.powi(3))
    }

    pub fn energy_unit_nev(&self) -> f64 {
        self.energy / ELECTRON_VOLT * 1e9
    }
}

pub fn natural_units(atom: &AtomSpec, length: f64) -> Result<UnitSystem> {
    natural_units_for_mass(atom.mass_kg, length)
}

pub fn natural_units_for_mass(mass_kg: f64, length: f64) -> Result<UnitSystem> {
    if !(mass_kg > 0.0) || !mass_kg.is_finite() {
        return Err(Error::invalid(format!("mass must be positive, got {mass_kg} kg")));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::invalid(format!("length scale must be positive, got {length} m")));
    }
    let time = mass_kg * length * length / HBAR;
    Ok(UnitSystem {
        mass_kg,
        length,
        energy: HBAR / time,
        time,
        velocity: length / time,
    })
}

/// Incident energy and momentum in natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticParams {
    pub e0: f64,
    pub p0: f64,
}

/// Kinematics from the incident speed `v` (m/s). With `m = 1`, `E0 = p0² / 2`.
pub fn kinetic_params(v: f64, units: &UnitSystem) -> Result<KineticParams> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(format!("velocity must be positive, got {v} m/s")));
    }
    let p0 = units.velocity_to_natural(v);
    Ok(KineticParams { e0: 0.5 * p0 * p0, p0 })
}
