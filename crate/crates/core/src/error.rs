use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site index {site} out of range for {n} spins")]
    IndexOutOfRange { site: usize, n: usize },

    #[error("invalid exchange pair ({0}, {1})")]
    InvalidPair(usize, usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid step: {0}")]
    InvalidStep(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
