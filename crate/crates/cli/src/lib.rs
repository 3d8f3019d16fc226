//! Command-line front end: flag parsing, experiment orchestration, and
//! CSV/SVG/manifest artifact emission. All numerical work lives in
//! `earlystop-core`; this crate owns IO, file formats, and the thread pool.

pub mod args;
pub mod commands;
pub mod csvfmt;
pub mod manifest;
pub mod pool;
pub mod svg;

use std::fmt;

/// Process-level error classification, mapped onto exit codes:
/// 0 success, 2 usage, 3 numerical/runtime, 4 failed `--check` threshold.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Check(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<earlystop_core::Error> for CliError {
    fn from(e: earlystop_core::Error) -> Self {
        match e {
            earlystop_core::Error::Config(m) => CliError::Usage(m.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
