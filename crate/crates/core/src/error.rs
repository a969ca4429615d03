use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: invalid UTF-8", path.display())]
    InvalidUtf8 { path: PathBuf, line: usize },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("ARPA {section}: {message}")]
    Arpa { section: String, message: String },

    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),

    #[error("cannot estimate a model from empty counts")]
    EmptyCounts,

    #[error("token is empty after normalization")]
    EmptyToken,

    #[error("expected {expected} items, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate development set: {0}")]
    DegenerateDev(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("feature config: {0}")]
    FeatureConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arpa(section: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Arpa {
            section: section.into(),
            message: message.into(),
        }
    }

    /// True for failures of the file system rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }

    /// True for errors caused by caller-supplied parameters.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidOrder(_) | Error::InvalidArgument(_))
    }
}
