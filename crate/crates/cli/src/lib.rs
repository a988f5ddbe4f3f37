//! Scenario-driven front end for the `descartes-core` library: a catalog of
//! named systems, a small configuration language, batch execution and
//! CSV/JSON export.

pub mod catalog;
pub mod config;
pub mod run;

use std::fmt;

/// Errors that abort a command before or outside per-output reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for runtime or domain failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
