use std::path::PathBuf;

use pgss::PgssError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("input data: {0}")]
    Input(String),

    #[error(transparent)]
    Model(#[from] PgssError),

    #[error("diagnostics failed: {0}")]
    Diagnostic(String),

    #[error("cannot write {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit code: 1 usage, 2 input data, 3 numeric, 4 diagnostic failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Io { .. } => 1,
            Self::Parse { .. } | Self::Input(_) => 2,
            Self::Model(PgssError::InvalidParameter { .. }) => 1,
            Self::Model(PgssError::InvalidInput(_)) => 2,
            Self::Model(PgssError::NumericOverflow { .. } | PgssError::Internal(_)) => 3,
            Self::Diagnostic(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
