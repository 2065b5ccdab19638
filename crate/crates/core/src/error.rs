use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {requested} exceeds the configured cap {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("spanning set is numerically rank-ambiguous (effective dimension {effective_dim})")]
    DegenerateBasis { effective_dim: usize },

    #[error("{what} is not contained in {container} (residual {residual:e})")]
    NotContained {
        what: String,
        container: String,
        residual: f64,
    },

    #[error("not a complex Hadamard matrix: {0}")]
    NotHadamard(String),

    #[error("not a bi-unitary matrix: {0}")]
    NotBiUnitary(String),

    #[error("inclusion is not connected; the Markov trace is not unique")]
    Disconnected,

    #[error("out of scope: {0}")]
    OutOfScope(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("elements do not form a basis: sum of lambda e1 lambda* differs from 1 by {residual:e}")]
    NotABasis { residual: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("no solution found after {restarts} restarts (best residual {best_residual:e})")]
    NotFound { restarts: usize, best_residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
