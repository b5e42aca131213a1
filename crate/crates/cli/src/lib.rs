//! Experiment orchestration for `bbmlab-core`: configuration, the worker pool, output files and
//! the named verification suites.

pub mod commands;
pub mod config;
pub mod output;
pub mod pool;
pub mod suites;

use std::fmt;

/// Exit status classes: configuration problems exit with 2, failures while running with 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bbmlab_core::Error> for CliError {
    fn from(e: bbmlab_core::Error) -> Self {
        match e {
            bbmlab_core::Error::Config(m) => CliError::Config(m),
            bbmlab_core::Error::InvalidLaw(m) => CliError::Config(m),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
