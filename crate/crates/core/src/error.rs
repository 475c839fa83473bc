use thiserror::Error;

/// Errors raised by the dimension toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix {index} is not invertible (|det| = {det:e})")]
    NonInvertible { index: usize, det: f64 },

    #[error("matrix {index} is not contracting (norm {norm} >= 1)")]
    NotContracting { index: usize, norm: f64 },

    #[error("scale order violated: Phi(r) = {phi:e} exceeds r = {r:e}")]
    ScaleOrder { phi: f64, r: f64 },

    #[error("resource cap exceeded: {what} ({count} > {limit})")]
    ResourceCap {
        what: &'static str,
        count: usize,
        limit: usize,
    },

    #[error("covariance factorization failed at jitter {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
