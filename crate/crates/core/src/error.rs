use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("size overflow: {0}")]
    Overflow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("rank-deficient matrix: {0}")]
    RankDeficient(String),

    #[error("combinatorial guard exceeded: {0}")]
    Guard(String),

    #[error("no support of size <= {kmax} reproduces the measurements")]
    NoSparseSolution { kmax: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated {what}: expected {expected} bytes, found {actual}")]
    Length {
        what: &'static str,
        expected: u64,
        actual: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
