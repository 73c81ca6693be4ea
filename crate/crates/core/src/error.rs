use thiserror::Error;

/// Errors surfaced by problem construction, solvers, and the SE recursion.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("ill-conditioned message at iteration {iteration}: {detail}")]
    IllConditioned { iteration: usize, detail: String },
    #[error("reconstruction threshold undefined: essential minimum of |U| is zero")]
    ThresholdUndefined,
    #[error("operation requires a linear measurement channel")]
    NonLinearChannel,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
