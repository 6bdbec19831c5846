use thiserror::Error;

use crate::cone::SolverStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver returned {status:?} after {iterations} iterations ({context})")]
    Solver {
        status: SolverStatus,
        iterations: usize,
        context: String,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("subproblem failed: {0}")]
    Subproblem(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures that originate in numerical solves rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Solver { .. } | Error::Subproblem(_) | Error::Precondition(_)
        )
    }
}
