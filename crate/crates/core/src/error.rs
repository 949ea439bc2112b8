use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver stack.
///
/// The variants are grouped by how the command line reports them:
/// configuration and usage problems exit with 1, numeric failures with 2.
#[derive(Debug, Error)]
pub enum SdwError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("singular tridiagonal system: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SdwError {
    pub fn config(msg: impl Into<String>) -> Self {
        SdwError::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        SdwError::Numeric(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        SdwError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SdwError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            SdwError::Config(_) | SdwError::Usage(_) => 1,
            SdwError::Numeric(_) | SdwError::Singular { .. } | SdwError::Domain(_) | SdwError::Io { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, SdwError>;
