use std::path::PathBuf;

use thiserror::Error;

use crate::timestepper::BlowUpReport;

pub type Result<T, E = KseError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum KseError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid initial data: {0}")]
    InitialData(String),

    #[error("{0}")]
    BlowUp(BlowUpReport),

    #[error("audit failed: {0}")]
    AuditFailure(String),

    #[error("snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl KseError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KseError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        KseError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command line front end and mirrored
    /// by the C status codes.
    pub fn exit_code(&self) -> i32 {
        match self {
            KseError::Config { .. }
            | KseError::InvalidParameter { .. }
            | KseError::InvalidGrid(_)
            | KseError::InitialData(_)
            | KseError::GridMismatch(_) => 2,
            KseError::BlowUp(_) | KseError::NonFinite { .. } => 3,
            KseError::AuditFailure(_) => 4,
            KseError::Snapshot { .. } | KseError::Io { .. } => 5,
        }
    }
}
