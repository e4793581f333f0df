use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] vi_core::Error),

    #[error("{0}")]
    Config(String),

    /// A run aborted or a numerical target was missed. Output written before
    /// the failure is kept.
    #[error("{0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                vi_core::Error::ToleranceNotReached { .. }
                | vi_core::Error::PowerIterationFailed { .. } => 3,
                _ => 2,
            },
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
            CliError::Csv { source, .. } => {
                if source.is_io_error() {
                    1
                } else {
                    2
                }
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
