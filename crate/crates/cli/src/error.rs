use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at line {line}: {message}")]
    ConfigLine { line: usize, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] qrnn_core::QrnnError),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigLine { .. } | CliError::Config(_) | CliError::Schema(_) => exit::USAGE,
            CliError::Io { .. } | CliError::Csv { .. } => exit::IO,
            CliError::Model(_) | CliError::CheckFailed(_) => exit::CHECK_FAILED,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
