use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A structural assumption on the graphs or mixing matrices does not hold.
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    /// A hypothesis required by a theoretical bound is not met.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical failure in {what} (residual {residual:e})")]
    NumericalFailure { what: String, residual: f64 },

    #[error("shape mismatch in {what}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("agent index {index} out of range for {agents} agents")]
    IndexOutOfRange { index: usize, agents: usize },

    #[error("trial aborted at iteration {iteration}: {reason}")]
    TrialAbort { iteration: usize, reason: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
