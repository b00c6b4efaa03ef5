use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const CORRUPTION: i32 = 3;
    pub const IO: i32 = 4;
    /// A detected breakdown: an expected scientific outcome, not a failure.
    pub const BLOWUP: i32 = 10;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] mulab_core::Error),
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
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::Core(mulab_core::Error::Corrupted { .. }) => exit::CORRUPTION,
            CliError::Core(_) => exit::CONFIG,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
