use thiserror::Error;

/// Errors raised by operator evaluation, problem construction and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("singular system: {0}")]
    Singular(String),
    /// The schedule violates a convergence hypothesis; one entry per failed condition.
    #[error("schedule rejected: {}", .0.join("; "))]
    Rejected(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
