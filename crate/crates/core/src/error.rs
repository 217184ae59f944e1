use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad pmf, unsorted breakpoints, mismatched lengths.
    #[error("invalid input: {0}")]
    Validation(String),
    /// Parameters outside the range an operation is defined for.
    #[error("parameter out of domain: {0}")]
    Domain(String),
    /// Structural precondition of a mechanism or builder not met.
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
