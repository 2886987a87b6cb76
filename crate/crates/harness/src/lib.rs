//! Sweeps, convergence studies, figure export and run metadata on top of the
//! `qrefl` solver.

pub mod config;
pub mod convergence;
pub mod error;
pub mod export;
pub mod metadata;
pub mod run;
pub mod sweep;

pub use config::Config;
pub use error::{HarnessError, Result};
