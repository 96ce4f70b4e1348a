//! Command-line stages of the detection pipeline. Each stage reads its inputs
//! from files and writes its outputs to the output directory, so stages can
//! be rerun independently.

pub mod commands;
pub mod config;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

pub use config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Diagrams,
    Calibrate,
    Detect,
    Baseline,
    ArlEdd,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration.
    Usage(String),
    /// Missing, unreadable or malformed input data.
    Data(String),
    /// Numerical breakdown (singular matrices, unreachable ARL targets).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub(crate) fn context(self, what: &str) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{what}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{what}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<percept::Error> for CliError {
    fn from(e: percept::Error) -> Self {
        let msg = e.to_string();
        if e.is_numeric() {
            CliError::Numeric(msg)
        } else if matches!(e, percept::Error::InvalidParameter(_)) {
            CliError::Usage(msg)
        } else {
            CliError::Data(msg)
        }
    }
}

/// Loads the config and runs `command`. `--seed` and `--out` override the
/// config's `seed` and `out`.
pub fn run(command: Command, config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<String, CliError> {
    let cfg = Config::load(config)?;
    let seed = seed.unwrap_or(cfg.seed);
    let out = out.unwrap_or_else(|| cfg.out.clone());
    commands::dispatch(command, &cfg, seed, &out)
}
