use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum TtError {
    #[error("index out of range: {0}")]
    Bounds(String),
    #[error("size cap exceeded: {needed} entries requested, cap is {cap}")]
    Size { needed: usize, cap: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("diagonalization failed for factor {factor}: {reason}")]
    Diagonalization { factor: usize, reason: String },
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("search budget exceeded: {needed} tuples, budget {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("regime violated at index {index}: {reason}")]
    Regime { index: usize, reason: String },
    #[error("unsupported boundary condition: {0}")]
    UnsupportedBoundary(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("linear algebra backend: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, TtError>;

impl From<ndarray_linalg::error::LinalgError> for TtError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        TtError::Linalg(e.to_string())
    }
}

impl From<serde_json::Error> for TtError {
    fn from(e: serde_json::Error) -> Self {
        TtError::Parse(e.to_string())
    }
}

impl From<ndarray::ShapeError> for TtError {
    fn from(e: ndarray::ShapeError) -> Self {
        TtError::Argument(e.to_string())
    }
}
