use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for configuration problems (bad file, bad value, bad flag).
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for numerical failures inside a pipeline.
pub const EXIT_NUMERIC: i32 = 3;
/// Exit status for file-system failures.
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numeric(#[source] g2ghost::Error),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Format { .. } => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<g2ghost::Error> for CliError {
    fn from(e: g2ghost::Error) -> Self {
        CliError::Numeric(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
