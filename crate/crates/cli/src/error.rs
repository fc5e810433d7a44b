use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] gaudy_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration and argument problems, 3 for
    /// file system failures, 4 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        use gaudy_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(E::Io { .. } | E::Csv(_)) => EXIT_IO,
            CliError::Core(
                E::MalformedHeader(_)
                | E::UnsupportedMaxval(_)
                | E::TruncatedPayload { .. }
                | E::Checkpoint(_),
            ) => EXIT_IO,
            CliError::Core(_) => EXIT_CONFIG,
        }
    }
}
