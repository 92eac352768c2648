//! Scenario runner behind the `fraclap` binary: INI configs in, run
//! directories with CSV/JSON results and a hashed manifest out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod manifest;

use std::fmt;
use std::path::PathBuf;

pub use commands::{cmd_check, cmd_eigen, cmd_export, cmd_probe, cmd_solve, ExportKind};
pub use config::Config;
pub use manifest::ExperimentManifest;

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad command line or config.
    Usage(String),
    Io(String),
    Numerical(fraclap_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fraclap_core::Error> for CliError {
    fn from(e: fraclap_core::Error) -> Self {
        match e {
            fraclap_core::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_ERROR
    }
}

/// What a verb produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub dir: PathBuf,
    /// False when a configured assertion failed.
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_PASS
        } else {
            EXIT_ASSERTION
        }
    }
}
