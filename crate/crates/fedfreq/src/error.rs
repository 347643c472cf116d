//! Error type for the simulator layer: configuration, data loading, and
//! validation failures, plus everything bubbling up from the estimators.

use std::path::PathBuf;

/// Simulator errors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A config line that could not be parsed or an unknown key.
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    /// A config that parses but describes an unrunnable experiment.
    #[error("invalid experiment: {0}")]
    Validation(String),

    /// A data file line that could not be parsed.
    #[error("{path}:{line}: {message}")]
    Data {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Estimator-level failure.
    #[error(transparent)]
    Core(#[from] fedfreq_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
