use std::path::{Path, PathBuf};

use serde::Serialize;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Usage,
    Io,
    Validation,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Io => 3,
            ErrorKind::Validation => 4,
            ErrorKind::Numerical => 5,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] fleetwise_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Usage(_) => ErrorKind::Usage,
            Error::Io { .. } | Error::MissingArtifact(_) => ErrorKind::Io,
            Error::Parse { .. } | Error::Validation(_) => ErrorKind::Validation,
            Error::Core(fleetwise_core::Error::NonFinite(_)) => ErrorKind::Numerical,
            Error::Core(_) => ErrorKind::Validation,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }

    /// Maps a failed file operation, turning "not found" into [`Error::MissingArtifact`].
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingArtifact(path.to_path_buf())
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    pub fn parse(path: &Path, message: impl ToString) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    /// Machine-readable form written to stderr by the CLI.
    pub fn to_json(&self) -> serde_json::Value {
        let mut doc = serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            Error::MissingArtifact(p) => doc["artifact"] = p.display().to_string().into(),
            Error::Io { path, .. } | Error::Parse { path, .. } => doc["path"] = path.display().to_string().into(),
            _ => {}
        }
        doc
    }
}
