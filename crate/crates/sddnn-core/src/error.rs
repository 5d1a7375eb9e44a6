//! Error type shared across the crate.
//!
//! Three failure classes matter to callers (and to the CLI's exit codes):
//! configuration errors (bad setup, caller can fix), input errors (bad data),
//! and internal errors (contract violations inside the pipeline).

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// The requested configuration is invalid (dimension chains, rates, splits).
    #[error("configuration error: {0}")]
    Config(String),

    /// The supplied data is invalid (shape mismatches, empty inputs, bad values).
    #[error("input error: {0}")]
    Input(String),

    /// A malformed record in an input file, with its 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// An internal contract was violated; indicates a bug, not bad user input.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// True for errors the caller caused (usage, configuration, malformed data).
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
