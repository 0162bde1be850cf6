use thiserror::Error;

/// Errors produced by the decomposition and denoising routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("reconstruction plan expects {planned} modes but the ensemble selected {selected}")]
    PlanMismatch { planned: usize, selected: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
