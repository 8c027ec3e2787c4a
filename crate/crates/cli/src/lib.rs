//! Front end for the `ruinlab` binary: configuration, experiment dispatch,
//! run directories and reports.

pub mod config;
pub mod report;
pub mod run;

use std::fmt;

/// Default output root when neither `--out` nor `RUINLAB_OUT` is given.
pub const DEFAULT_OUT_ROOT: &str = "runs";

#[derive(Debug)]
pub enum CliError {
    /// Bad input, naming the offending key.
    Validation { key: String, reason: String },
    /// A numerical routine refused or missed its accuracy target.
    Numerical(String),
    /// Checks of a run directory did not pass.
    Failed(usize),
}

impl CliError {
    pub fn validation(key: &str, reason: impl Into<String>) -> Self {
        CliError::Validation {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Validation { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation { key, reason } => write!(f, "invalid `{key}`: {reason}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Failed(n) => write!(f, "{n} check(s) failed"),
        }
    }
}

impl std::error::Error for CliError {}

/// Errors from writing run artifacts.
pub(crate) fn io_error(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::validation("out", format!("{}: {e}", path.display()))
}
