//! Quantum reflection of atomic wavepackets from a perfectly reflecting plate
//! pierced by a circular micropore.
//!
//! The crate evaluates the exact electrostatic image potential of the pore,
//! continues it through the plate, and propagates a Gaussian wavepacket on a
//! uniform 2D `(rho, z)` grid with a Strang split-step spectral scheme inside an
//! absorbing frame. Reflectivities are read off the final field in position and
//! momentum space. A 1D Numerov solver is provided as an independent check at
//! normal incidence.
//!
//! All numerical modules are generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

pub mod analysis;
pub mod dump;
pub mod error;
pub mod fft;
pub mod field;
pub mod oracle1d;
pub mod potential;
pub mod propagator;
pub mod scalar;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Real;
pub use units::{AtomSpec, KineticParams, UnitSystem};

pub type Complex = num_complex::Complex<f64>;

pub type Grid2D = field::Grid2D<f64>;
pub type WaveField = field::WaveField<f64>;
pub type PotentialParams = potential::PotentialParams<f64>;
pub type ShorthandValues = potential::ShorthandValues<f64>;
pub type XiCoefficients = potential::XiCoefficients<f64>;
pub type PropagationConfig = propagator::PropagationConfig<f64>;
pub type Absorber = propagator::Absorber<f64>;
pub type Propagation = propagator::Propagation<f64>;
pub type Moments = analysis::Moments<f64>;

pub type Grid2D32 = field::Grid2D<f32>;
pub type WaveField32 = field::WaveField<f32>;
pub type PotentialParams32 = potential::PotentialParams<f32>;
pub type PropagationConfig32 = propagator::PropagationConfig<f32>;
