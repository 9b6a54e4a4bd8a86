use thiserror::Error;

/// Command failures, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or input files. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Divergence or too many failed runs. Exit code 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<rsgd::Error> for CliError {
    fn from(e: rsgd::Error) -> Self {
        use rsgd::Error::*;
        match e {
            InvalidInput(_) | DomainError(_) | NotPositiveDefinite { .. } => CliError::Usage(e.to_string()),
            Diverged { .. } | TooManyFailures { .. } | IllConditioned { .. } | NoConvergence { .. } => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
