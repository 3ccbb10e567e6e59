//! The crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimension or layer-index mismatch between arguments.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A network, partition, box, or group list failed validation; the
    /// details list every violation found.
    #[error("invalid {kind}: {details}")]
    Invalid { kind: String, details: String },
    /// A document could not be parsed; the message carries the location.
    #[error("parse error: {0}")]
    Parse(String),
    /// An operation refused an input outside its supported regime (for
    /// example, the exact enumeration oracle beyond its size guard).
    #[error("{0}")]
    Unsupported(String),
    #[error("solver error: {0}")]
    Solver(#[from] innrange_milp::SolveError),
}

impl Error {
    pub(crate) fn from_violations(kind: &str, violations: &[String]) -> Error {
        Error::Invalid {
            kind: kind.to_string(),
            details: violations.join("; "),
        }
    }

    pub(crate) fn invalid_partition(details: impl Into<String>) -> Error {
        Error::Invalid {
            kind: "partition".to_string(),
            details: details.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
