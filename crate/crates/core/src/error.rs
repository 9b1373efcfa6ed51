use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vectors are linearly dependent")]
    DependentVectors,
    #[error("cannot complete prescription to an invertible matrix")]
    NotInvertible,
    #[error("subspace is not invariant (residual {residual:.3e})")]
    NotInvariant { residual: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input at `{field}`: {reason}")]
    Input { field: String, reason: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
