use thiserror::Error;

/// Errors surfaced by the runner, each with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{failed} of {total} trials failed")]
    TrialFailures { failed: usize, total: usize },
    #[error(transparent)]
    Numerical(#[from] outlab_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::TrialFailures { .. } | CliError::Numerical(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
