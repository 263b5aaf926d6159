//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    /// Fixed-step gradient descent diverged; the last finite iterate is attached.
    #[error("step size failure: objective grew for {grew_cycles} consecutive cycles")]
    StepSizeFailure {
        grew_cycles: usize,
        last: Box<crate::design::DesignResult>,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code for the CLI: 2 for bad input, 3 for numerical trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Format(_) => 2,
            Error::NumericalFailure(_) | Error::StepSizeFailure { .. } => 3,
            Error::ResourceLimit(_) => 2,
            Error::Io(_) => 2,
        }
    }
}
