use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flags, malformed or inconsistent configuration.
    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{0}")]
    Core(#[from] randhmc::Error),

    /// A run that should be impossible, e.g. gradient accounting that does not
    /// match the oracle counter.
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

impl HarnessError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Self::Csv {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for usage and configuration errors, 3 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Core(_) => 2,
            Self::Io { .. } | Self::Csv { .. } => 3,
            Self::Inconsistent(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
