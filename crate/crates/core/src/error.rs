use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("failed to converge: {0}")]
    Convergence(String),

    #[error("{what}: residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    Tolerance {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True when the error signals a violated numerical tolerance rather than
    /// bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Tolerance { .. } | Error::Convergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}
