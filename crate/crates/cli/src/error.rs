use talc_core::TalcError;
use talc_labeler::LabelerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid inputs. Exit code 2.
    #[error("{0}")]
    Validation(String),
    /// The model produced non-finite values. Exit code 1.
    #[error("{0}")]
    Numeric(String),
    /// Output I/O and anything else unexpected. Exit code 1.
    #[error("{0}")]
    Internal(String),
    /// A replayed run did not reproduce its recorded outputs. Exit code 1.
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) | CliError::Internal(_) | CliError::Mismatch(_) => 1,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl From<TalcError> for CliError {
    fn from(e: TalcError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<LabelerError> for CliError {
    fn from(e: LabelerError) -> Self {
        match e {
            LabelerError::Core(inner) => inner.into(),
            LabelerError::Io(_) | LabelerError::Request(_) => CliError::Internal(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
