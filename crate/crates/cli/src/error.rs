use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rgsla_core::Error),

    /// Bad flags or plan contents.
    #[error("invalid input: {0}")]
    Usage(String),

    #[error("i/o error on {}: {msg}", path.display())]
    Io { path: PathBuf, msg: String },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            msg: err.to_string(),
        }
    }

    /// 2 for validation and parse problems, 3 for numeric divergence, 4 for
    /// I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(rgsla_core::Error::Numeric { .. }) => 3,
            CliError::Core(rgsla_core::Error::Io { .. }) | CliError::Io { .. } => 4,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}
