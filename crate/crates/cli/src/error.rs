use thiserror::Error;

/// Errors raised by argument handling itself.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

/// 2 for validation and usage problems anywhere in the stack, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<CliError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<oam_core::OpticsError>() {
            return if e.is_validation() { 2 } else { 1 };
        }
        if let Some(e) = cause.downcast_ref::<oam_dataset::DatasetError>() {
            return if e.is_validation() { 2 } else { 1 };
        }
        if let Some(e) = cause.downcast_ref::<oam_classifier::ClassifierError>() {
            return if e.is_validation() { 2 } else { 1 };
        }
    }
    1
}
