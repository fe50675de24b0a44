use std::process::ExitCode;

use kisin_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config keys or input files: exit 2.
    #[error("usage: {0}")]
    Usage(String),
    /// A check or replay found a violation: exit 1.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Core(Error::Parse(_) | Error::InvalidField(_) | Error::OutOfRange(_)) => {
                ExitCode::from(2)
            }
            _ => ExitCode::from(1),
        }
    }
}
