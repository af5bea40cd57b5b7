//! Application-level errors with the exit-code contract:
//! 1 validation, 2 numerical failure, 3 I/O.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv failure on {path}: {message}")]
    Csv { path: PathBuf, message: String },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Numerical(_) => 2,
            AppError::Io { .. } | AppError::Csv { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<robsel_core::Error> for AppError {
    fn from(e: robsel_core::Error) -> Self {
        match e {
            robsel_core::Error::Invalid(_) | robsel_core::Error::Dimension { .. } => {
                AppError::Validation(e.to_string())
            }
            _ => AppError::Numerical(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
