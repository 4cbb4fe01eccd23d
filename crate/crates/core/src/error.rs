use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite: leading minor of order {order} has pivot {pivot:e}")]
    NotPositiveDefinite { order: usize, pivot: f64 },

    #[error("dimension {dim} exceeds the supported maximum of {max}")]
    Capacity { dim: usize, max: usize },

    #[error("no candidate active set satisfies the optimality conditions: {0}")]
    SolverInconsistency(String),

    #[error("unsupported degeneracy: {0}")]
    UnsupportedDegeneracy(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
