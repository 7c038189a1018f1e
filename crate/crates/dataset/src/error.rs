use std::io;
use std::path::PathBuf;

use oam_core::OpticsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{context}: {source}")]
    Optics {
        context: String,
        #[source]
        source: OpticsError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DatasetError {
    pub fn is_validation(&self) -> bool {
        match self {
            DatasetError::Validation(_) => true,
            DatasetError::Optics { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<OpticsError> for DatasetError {
    fn from(source: OpticsError) -> Self {
        DatasetError::Optics {
            context: "optics".into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, DatasetError>;
