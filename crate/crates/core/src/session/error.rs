use std::path::PathBuf;

use thiserror::Error;

use super::validate::Violation;
use crate::error::ErrorCode;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("missing file: {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("malformed manifest {}: {reason}", path.display())]
    MalformedManifest { path: PathBuf, reason: String },

    #[error("malformed data in {}: {reason}", path.display())]
    MalformedData { path: PathBuf, reason: String },

    #[error("invariant violated: {rule} ({field}{})", stream.as_ref().map(|s| format!(", stream '{s}'")).unwrap_or_default())]
    InvariantViolation {
        code: &'static str,
        rule: &'static str,
        field: String,
        stream: Option<String>,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<Violation> for SessionError {
    fn from(v: Violation) -> Self {
        SessionError::InvariantViolation {
            code: v.code,
            rule: v.rule,
            field: v.field,
            stream: v.stream,
        }
    }
}

impl ErrorCode for SessionError {
    fn module(&self) -> &'static str {
        "session_store"
    }

    fn code(&self) -> &'static str {
        match self {
            SessionError::MissingFile { .. } => "missing_file",
            SessionError::MalformedManifest { .. } => "malformed_manifest",
            SessionError::MalformedData { .. } => "malformed_data",
            SessionError::InvariantViolation { .. } => "invariant_violation",
            SessionError::Io { .. } => "io_error",
        }
    }
}
