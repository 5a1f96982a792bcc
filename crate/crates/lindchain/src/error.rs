use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("site index {site} out of range for chain of {n} sites")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("chain length {n} exceeds configured maximum {max}")]
    ChainTooLong { n: usize, max: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("numerical failure at t = {t}: {reason}")]
    NumericalFailure { t: f64, reason: String },

    #[error("degenerate Liouvillian null space: dimension {dim}")]
    DegenerateNullSpace { dim: usize },

    #[error("partition distribution is not translation invariant")]
    NotTranslationInvariant,

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
