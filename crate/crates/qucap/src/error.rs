use std::io;

use thiserror::Error;

/// Failures that end a run before any data is written.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Core(#[from] qucap_core::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 3 for integration and state-integrity failures, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.reached_time().is_some() => 3,
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
