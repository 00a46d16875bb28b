use std::fmt;
use std::path::{Path, PathBuf};

use quench_core::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, flags or input files (exit 2).
    Config(String),
    /// Output could not be written (exit 3).
    Io { path: PathBuf, source: std::io::Error },
    /// The simulation itself failed (exit 4).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io { path, source } => write!(f, "cannot write {}: {source}", path.display()),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingKey(_) | Error::InvalidValue { .. } => CliError::Config(e.to_string()),
            Error::ConvergenceFailure { .. } | Error::DegenerateFit { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
