use std::path::PathBuf;

use crate::image_io::ImageError;

/// Process exit codes.
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] msce_core::Error),
    #[error("{context}: {source}")]
    CoreAt { context: String, source: msce_core::Error },
    #[error("{0}")]
    Runtime(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn core(context: impl Into<String>, source: msce_core::Error) -> Self {
        CliError::CoreAt { context: context.into(), source }
    }

    /// 2 for anything the caller can fix by changing flags or inputs that do
    /// not exist; 3 for failures while doing the work.
    pub fn exit_code(&self) -> i32 {
        use msce_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Image(ImageError::Missing(_)) => EXIT_USAGE,
            CliError::Core(source) | CliError::CoreAt { source, .. } => match source {
                E::InvalidConfig(_) | E::InvalidScale(_) | E::EmptyCandidates | E::ChannelMismatch { .. } => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            },
            _ => EXIT_RUNTIME,
        }
    }
}
