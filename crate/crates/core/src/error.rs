use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("convexity violated at node {node} (eigenvalue {eigenvalue:e})")]
    ConvexityViolation { node: usize, eigenvalue: f64 },

    #[error("ellipsoid family fails to span at node {node} (smallest singular value {sigma:e})")]
    SpanningFailure { node: usize, sigma: f64 },

    #[error("kernel reconstruction residual {residual:e} exceeds {limit:e}")]
    ReconstructionFailure { residual: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
