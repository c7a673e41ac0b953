use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A Cholesky pivot was not strictly positive. Callers usually respond by
    /// increasing the damping.
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("batch is empty")]
    EmptyBatch,

    #[error("model `{model}` does not provide {capability}")]
    CapabilityMissing {
        model: String,
        capability: &'static str,
    },

    #[error("function evaluation returned a non-finite value while probing coordinate {coordinate}")]
    NonFiniteEvaluation { coordinate: usize },

    #[error("shape mismatch: {left} vs {right} elements")]
    ShapeMismatch { left: usize, right: usize },

    #[error("line search found no acceptable step after {backtracks} backtracks")]
    LineSearchFailed { backtracks: usize },

    #[error("method `{method}` failed (last lambda {lambda:e}): {reason}")]
    MetricFailure {
        method: String,
        lambda: f64,
        reason: String,
    },

    #[error("unknown dataset spec `{0}`")]
    UnknownSpec(String),

    #[error("malformed trace {}: {reason}", path.display())]
    MalformedTrace { path: PathBuf, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
