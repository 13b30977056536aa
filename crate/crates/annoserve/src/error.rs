use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    NotFound(String),
    /// The request is well-formed but the task is in the wrong state or
    /// bound to someone else.
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error("duplicate task ids: {}", .0.join(", "))]
    DuplicateIds(Vec<String>),
    #[error("event log {path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("event log {path} line {line}: {message}")]
    Replay {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Invalid(_) => "invalid",
            ServiceError::DuplicateIds(_) => "duplicate_ids",
            ServiceError::Log { .. } | ServiceError::Replay { .. } => "internal",
        }
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
