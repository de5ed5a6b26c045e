use thiserror::Error;

/// CLI failure, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, config or input data (exit 2).
    #[error("{0}")]
    Usage(String),
    /// Unreadable input or unwritable output (exit 3).
    #[error("{0}")]
    Io(String),
    /// An estimate could not be produced (exit 4).
    #[error("{0}")]
    Estimation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Estimation(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<plcc::Error> for CliError {
    fn from(e: plcc::Error) -> Self {
        match e {
            plcc::Error::EstimationFailed(_) | plcc::Error::NonPositiveOrdinate { .. } => {
                CliError::Estimation(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
