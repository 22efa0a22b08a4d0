//! Command-line layer over the forecasting core: CSV panel ingestion with a
//! declared schema, run directories with versioned text checkpoints, the
//! train / backtest / baseline / comparison commands, and the exit-code
//! contract (0 success, 2 data error, 3 training failure, 64 usage error,
//! 65 input-format error).

use std::fmt;
use std::path::Path;

use cesrnn_core::ForecastError;

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataio;
pub mod report;

/// Process exit codes, fixed by contract.
pub mod exit {
    pub const OK: i32 = 0;
    pub const DATA: i32 = 2;
    pub const TRAINING: i32 = 3;
    pub const USAGE: i32 = 64;
    pub const FORMAT: i32 = 65;
}

/// One failure with an exit class attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad flags, bad config values, impossible requests.
    Usage(String),
    /// Missing or inconsistent data (files, panels, run directories).
    Data(String),
    /// Malformed input content (CSV cells, checkpoints, loss tables).
    Format(String),
    /// Training aborted (divergence).
    Training(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Data(_) => exit::DATA,
            CliError::Format(_) => exit::FORMAT,
            CliError::Training(_) => exit::TRAINING,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Data(m) => write!(f, "{m}"),
            CliError::Format(m) => write!(f, "{m}"),
            CliError::Training(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ForecastError> for CliError {
    fn from(e: ForecastError) -> CliError {
        match e {
            ForecastError::Config(m) => CliError::Usage(m),
            ForecastError::Diverged { .. } => CliError::Training(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Wraps an IO failure with the path it concerned. IO problems are data
/// errors in the exit contract (missing directories, unwritable outputs).
pub fn io_err(context: &str, path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{context} {}: {e}", path.display()))
}
