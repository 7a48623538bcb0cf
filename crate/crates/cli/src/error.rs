use thiserror::Error;

/// Failures of a CLI run, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Contract(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ssrbell_core::Error> for CliError {
    fn from(e: ssrbell_core::Error) -> Self {
        use ssrbell_core::Error as E;
        match e {
            E::Contract(_) | E::NotSsrCompliant(_) | E::InvalidState(_) => CliError::Contract(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
