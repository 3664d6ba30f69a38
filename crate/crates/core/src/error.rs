use thiserror::Error;

use crate::Valuations;

pub type Result<T, E = CpalError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CpalError {
    #[error("invalid tree: {0}")]
    Validation(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Valuations,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("strict pure construction invalid: {0}")]
    ConstructionInvalid(String),

    #[error("no sign change: {0}")]
    NoSignChange(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CpalError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            CpalError::Validation(_)
            | CpalError::Json(_)
            | CpalError::Io(_)
            | CpalError::Unsupported(_) => 2,
            CpalError::Numeric(_)
            | CpalError::ConstructionInvalid(_)
            | CpalError::NoSignChange(_) => 3,
            CpalError::NoConvergence { .. } => 4,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        CpalError::Validation(msg.into())
    }
}
