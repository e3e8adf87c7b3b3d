use thiserror::Error;

/// Errors raised by the laboratory. Messages name the precondition that was violated.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid scale function: {0}")]
    InvalidScale(String),

    #[error("inadmissible setup: {}", .0.join("; "))]
    Inadmissible(Vec<String>),

    #[error("ratio condition fails: {0}")]
    RatioCondition(String),

    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),

    #[error("kernel rejected: {0}")]
    Kernel(String),

    #[error("empty family: {0}")]
    EmptyFamily(String),

    #[error("malformed file: {0}")]
    Format(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
