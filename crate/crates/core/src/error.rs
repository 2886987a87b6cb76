use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Evaluation on the rim of the pore (or on the plate plane) where the
    /// image potential diverges.
    #[error("singular point at rho = {rho}, z = {z}")]
    SingularPoint { rho: f64, z: f64 },

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("classically forbidden point: E = {energy} <= V({z}) = {potential}")]
    ClassicallyForbidden { z: f64, energy: f64, potential: f64 },

    #[error("no interior maximum of the badlands function; scan: {scan}")]
    NoInteriorMaximum { scan: String },

    #[error("numerical blow-up at step {step}")]
    NumericalBlowup { step: usize },

    #[error("not converged: {0}")]
    NotConverged(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
