use nbproc_core::corpus::CorpusError;
use nbproc_core::evaluation::EvalError;
use nbproc_core::models::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or an invalid configuration.
    #[error("{0}")]
    Usage(String),
    /// A file could not be read, parsed or written.
    #[error("{0}")]
    Io(String),
    /// A run failed, or a validation check did not pass.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub(crate) fn io(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl From<CorpusError> for CliError {
    fn from(err: CorpusError) -> Self {
        match err {
            CorpusError::Io { .. } | CorpusError::Parse { .. } => CliError::Io(err.to_string()),
            CorpusError::Domain { .. } => CliError::Usage(err.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(err: ModelError) -> Self {
        match err {
            ModelError::Hyper(_) => CliError::Usage(err.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::Csv(_) => CliError::Io(err.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}
