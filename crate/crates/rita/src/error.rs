use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures surfaced by the command line front end.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed configuration or input file; `line` is 1-based.
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    /// Errors from the estimators, passed through with their own message.
    #[error("{0}")]
    Estimation(rita_core::Error),
}

impl CliError {
    pub fn parse(path: &Path, line: u64, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.to_path_buf(), line, message: message.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// 1 for bad input, 2 for estimator failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Estimation(_) => 2,
            _ => 1,
        }
    }

    /// Maps row-level data errors back to CSV line numbers (header is line 1).
    pub fn from_core(err: rita_core::Error, survey: Option<&Path>) -> Self {
        use rita_core::Error as E;
        match (err, survey) {
            (E::MissingValue { row, field }, Some(path)) => {
                CliError::parse(path, row as u64 + 2, format!("missing value for `{field}`"))
            }
            (E::InvalidRespondent { row, message }, Some(path)) => CliError::parse(path, row as u64 + 2, message),
            (err, _) => CliError::Estimation(err),
        }
    }
}

impl From<rita_core::Error> for CliError {
    fn from(err: rita_core::Error) -> Self {
        CliError::Estimation(err)
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
