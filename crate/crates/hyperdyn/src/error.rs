//! Error types shared across the crate.
//!
//! Every error carries a class that maps to a stable process exit code, so
//! the CLI can distinguish bad geometry from blown budgets or non-converged
//! iterations without string matching.

use thiserror::Error;

/// Coarse failure classes with fixed exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input, bad flags, unreadable files.
    Usage,
    /// Invalid geometry: overlapping disks, non-contracting generators,
    /// inadmissible words or evaluation points.
    Geometry,
    /// A configured resource cap would be exceeded.
    Budget,
    /// An iteration failed to converge or a bracket failed.
    Convergence,
    /// A quantity could not be resolved from the data (e.g. an all-noise
    /// decay window).
    Indeterminate,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Geometry => 2,
            ErrorClass::Budget => 3,
            ErrorClass::Convergence => 4,
            ErrorClass::Indeterminate => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Usage(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("indeterminate result: {0}")]
    Indeterminate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Usage(_) | Error::Io(_) | Error::Json(_) => ErrorClass::Usage,
            Error::Geometry(_) => ErrorClass::Geometry,
            Error::Budget(_) => ErrorClass::Budget,
            Error::Convergence(_) => ErrorClass::Convergence,
            Error::Indeterminate(_) => ErrorClass::Indeterminate,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
