use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("observation outside the model domain: {0}")]
    OutOfDomain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("markov chain is not mixing: no m <= {max_m} with strictly positive m-step kernels")]
    NonMixing { max_m: usize },

    #[error("unsupported model for {0}")]
    Unsupported(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("zero point density at {count} node(s) where the integrand is positive")]
    ZeroDensity { count: usize, nodes: Vec<usize> },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("empty cells after sampling: {0:?}")]
    EmptyCells(Vec<usize>),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("preflight check failed: {0}")]
    Preflight(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
