use std::io;

use oam_dataset::DatasetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ClassifierError {
    pub fn is_validation(&self) -> bool {
        match self {
            ClassifierError::Validation(_) => true,
            ClassifierError::Dataset(e) => e.is_validation(),
            _ => false,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> ClassifierError {
    ClassifierError::Validation(msg.into())
}

pub type Result<T> = std::result::Result<T, ClassifierError>;
