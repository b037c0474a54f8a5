//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation precondition
    /// (dimension mismatch, out-of-range parameter, too few samples).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration object is structurally valid JSON but describes
    /// something the library cannot run (empty class, missing field,
    /// vacuous bound).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An internal consistency check failed; indicates a bug or a
    /// numerically hopeless input rather than a usage error.
    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
