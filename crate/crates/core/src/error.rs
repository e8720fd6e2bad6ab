use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Malformed or inconsistent file content. `offset` is the byte offset
    /// into the stream where the problem was detected, when known.
    #[error("format error{}{}: {message}", .path.as_ref().map(|p| format!(" in {}", p.display())).unwrap_or_default(), .offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    Format {
        path: Option<PathBuf>,
        offset: Option<u64>,
        message: String,
    },

    #[error("unsatisfiable constraint: {0}")]
    Unsatisfiable(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(offset: Option<u64>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: None,
            offset,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach the offending file to a format error.
    pub fn with_path(self, p: impl Into<PathBuf>) -> Self {
        match self {
            Error::Format {
                path: None,
                offset,
                message,
            } => Error::Format {
                path: Some(p.into()),
                offset,
                message,
            },
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::Format { .. } | Error::Io { .. } => 2,
            Error::Unsatisfiable(_) => 3,
        }
    }
}
