use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("ENGINE_ERROR in {context}: {source}")]
    Engine {
        context: String,
        source: trajzoom_core::Error,
    },
    #[error("IO_ERROR on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("IO_ERROR on {}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("PARSE_ERROR in {}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("MISSING_COLUMN `{column}` in {}", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("CONSISTENCY_FAILURE: {0}")]
    Consistency(String),
}

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        RunError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn engine(context: impl Into<String>, source: trajzoom_core::Error) -> Self {
        RunError::Engine {
            context: context.into(),
            source,
        }
    }

    /// 2 for configuration errors, 3 for engine and IO errors, 4 for failed
    /// internal checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Consistency(_) => 4,
            _ => 3,
        }
    }
}
