use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the simulation, analysis and fitting routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its physical or numerical domain.
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },

    /// An input structure (dataset, path, spectrum pair) is unusable.
    #[error("{0}")]
    InvalidInput(String),

    /// Inverting the dephasing model requires more dephasing than phase noise explains.
    #[error("phase-noise-dominated: implied differential-loss dephasing {implied_xi:.3e} is negative")]
    PhaseNoiseDominated { implied_xi: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter { name, value, reason }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code associated with the error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 3,
            Error::Io { .. } => 5,
            _ => 4,
        }
    }
}
