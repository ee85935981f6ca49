use std::path::PathBuf;

use chessboard_core::Error as CoreError;

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitStatus {
    Config = 2,
    Io = 3,
    Inconsistent = 4,
    Data = 5,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Config(_) => ExitStatus::Config,
            CliError::Io { .. } => ExitStatus::Io,
            CliError::Data { .. } => ExitStatus::Data,
            CliError::Core(err) => match err {
                CoreError::InconsistentReturn(_) => ExitStatus::Inconsistent,
                CoreError::SiteOutOfRange { .. }
                | CoreError::ShapeMismatch { .. }
                | CoreError::TimeOutOfRange { .. }
                | CoreError::NonFinite { .. }
                | CoreError::TooFewSlices { .. } => ExitStatus::Data,
                _ => ExitStatus::Config,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
