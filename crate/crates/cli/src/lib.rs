//! Library side of the `dssh` binary: configuration, the six dataset
//! commands and file emission.

use std::fmt;
use std::path::{Path, PathBuf};

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, Command};
pub use config::{Format, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(dssh_core::Error),
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(e) => write!(f, "numeric failure: {e}"),
            CliError::Io { path, message } => write!(f, "I/O error at {}: {message}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dssh_core::Error> for CliError {
    /// Bad parameter values are the config's fault; everything else is a
    /// numerical failure.
    fn from(e: dssh_core::Error) -> Self {
        use dssh_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::Unsupported(_) | E::OutOfRegime(_) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}
