use std::path::PathBuf;

use bsmooth_core::ErrorKind;
use thiserror::Error;

/// Errors surfaced by the command-line front end.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or file contents.
    #[error("{0}")]
    Input(String),
    /// Malformed CSV row.
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    /// Fewer rows than the kernel order needs.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Error from the estimators.
    #[error(transparent)]
    Core(#[from] bsmooth_core::Error),
    /// Filesystem failure.
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// Process exit code: 2 for input problems, 3 for insufficient data,
    /// 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Parse { .. } | CliError::Io { .. } => 2,
            CliError::InsufficientData(_) => 3,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::InsufficientData => 3,
                ErrorKind::Numerical => 4,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
