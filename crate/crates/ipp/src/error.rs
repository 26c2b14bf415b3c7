use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument failed validation (wrong shape, empty input, bad range).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A scale exponent left the representable range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// A covariance matrix is not (numerically) symmetric positive definite.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// CSV ingestion failed; the message names the offending line.
    #[error("csv error: {0}")]
    Csv(String),

    /// The optimizer could not produce a finite objective value.
    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
