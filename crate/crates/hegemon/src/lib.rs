//! Equilibrium engine for a two-stage club-formation game between two superpowers.
//!
//! - `model`: game primitives (players, exact locations, cost shares, utilities)
//! - `coalition`: stage-one formation and stage-two shifting fixed points
//! - `equilibrium`: backward-induction solver with tie rules
//! - `analytics`: evenly-spaced special cases, closed-form thresholds, phase sweeps
//! - `oracle`: exhaustive core enumeration and randomized-schedule fuzzing
//! - `pipeline`: country-panel ingestion and yearly simulation
//! - `exec`: parallel map helpers with a sequential fallback

pub mod analytics;
pub mod cli;
pub mod coalition;
pub mod equilibrium;
pub mod exec;
pub mod model;
pub mod oracle;
pub mod pipeline;

pub use model::{World, EPS};

/// Crate-wide error type; variants map onto the CLI exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad configuration or arguments (exit 1).
    #[error("config error: {0}")]
    Config(String),
    /// Bad or unusable input data (exit 1).
    #[error("data error: {0}")]
    Data(String),
    /// Instance too large for an exhaustive oracle check (exit 1).
    #[error("oracle bound exceeded: {0}")]
    OracleBound(String),
    /// Internal invariant violation (exit 2).
    #[error("internal invariant violation: {0}")]
    Internal(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error per the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Data(_) | Error::OracleBound(_) => 1,
            Error::Internal(_) => 2,
        }
    }
}
