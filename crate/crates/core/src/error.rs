use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("combined dimension {dim} exceeds the configured maximum {max}")]
    SizeOverflow { dim: usize, max: usize },

    #[error("{what}: cutoff {got} is too small, at least {required} is required")]
    CutoffTooSmall {
        what: &'static str,
        required: usize,
        got: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state is not superselection compliant: {0}")]
    NotSsrCompliant(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical contract violated: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
