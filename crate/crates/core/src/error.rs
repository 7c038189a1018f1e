use std::io;

use thiserror::Error;

/// Errors raised by the optics layer.
#[derive(Debug, Error)]
pub enum OpticsError {
    /// An input violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),
    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A binary container could not be decoded.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl OpticsError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        OpticsError::Validation(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        OpticsError::Numeric(msg.into())
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, OpticsError::Validation(_))
    }
}

pub type Result<T> = std::result::Result<T, OpticsError>;
