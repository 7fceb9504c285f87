use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the acceleration pipeline.
#[derive(Debug, Error)]
pub enum RnaError {
    #[error("window too small: need at least {needed} iterates, got {got}")]
    WindowTooSmall { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular system: the regularized Gram matrix is rank deficient at lambda = {lambda:e}; use lambda > 0")]
    SingularSystem { lambda: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate coefficient sum {sum:e} (|z|_1 = {l1:e}); increase lambda")]
    DegenerateSum { sum: f64, l1: f64 },

    #[error("ordering violation: epoch {epoch} does not follow epoch {last}")]
    OrderingViolation { last: i64, epoch: i64 },

    #[error("format error in {path:?}: {reason}")]
    FormatError { path: PathBuf, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RnaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RnaError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        RnaError::FormatError {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, RnaError>;
