use std::path::PathBuf;

/// Everything the harness can fail with, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Core(#[from] bregman_dlnn::Error),
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        BenchError::Parse { path: path.into(), message: message.into() }
    }

    /// 0 is success; 1 covers configuration, input and I/O problems; 2 is a
    /// numeric failure inside a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Numeric(_) | BenchError::Core(bregman_dlnn::Error::Numeric(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
