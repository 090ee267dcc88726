use thiserror::Error;

/// Failure classes, mapped to process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, configuration or input files (exit code 2).
    #[error("input error: {0}")]
    Input(String),
    /// A numerical or mathematical check failed (exit code 1).
    #[error("check failed: {0}")]
    Math(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Math(_) => 1,
        }
    }

    pub fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<valforge::Error> for CliError {
    fn from(e: valforge::Error) -> Self {
        use valforge::Error::*;
        match e {
            InvalidInput(_) | DimensionMismatch { .. } | Unsupported(_) | Json(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Math(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
