use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Budget(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io { .. } => 4,
            CliError::VerifyFailed(_) => 5,
            CliError::Other(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<threshold_lab::Error> for CliError {
    fn from(e: threshold_lab::Error) -> Self {
        use threshold_lab::Error as E;
        match e {
            E::Parameter(_) | E::Domain(_) | E::Dimension(_) => CliError::Parse(e.to_string()),
            E::Budget { .. } => CliError::Budget(format!("{e}; use --mode mc for this code")),
            E::Bracket(_) | E::Consistency(_) => CliError::Other(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
