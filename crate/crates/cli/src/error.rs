//! Error categories and their process exit codes.

use std::fmt;

/// Failure of a command-line run.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {source_name}: line {line}: {msg}")]
    Parse { source_name: String, line: usize, msg: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub const EXIT_PARSE: u8 = 3;
    pub const EXIT_VALIDATION: u8 = 4;
    pub const EXIT_CONFIG: u8 = 5;
    pub const EXIT_IO: u8 = 6;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } => Self::EXIT_PARSE,
            CliError::Validation(_) => Self::EXIT_VALIDATION,
            CliError::Config(_) => Self::EXIT_CONFIG,
            CliError::Io(_) => Self::EXIT_IO,
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }
}

impl From<multiscale_core::Error> for CliError {
    fn from(e: multiscale_core::Error) -> Self {
        match e {
            multiscale_core::Error::InvalidArgument(m) => CliError::Validation(m),
            multiscale_core::Error::Config(m) => CliError::Config(m),
            multiscale_core::Error::Parse { line, msg } => CliError::Parse { source_name: "<input>".into(), line, msg },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
