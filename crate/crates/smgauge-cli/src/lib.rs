//! Command-line companion of `smgauge`: JSON run configurations,
//! initial-data synthesis, run orchestration with CSV/JSONL/binary
//! output, and the verification suites behind `smgauge verify`.

pub mod config;
pub mod format;
pub mod initial;
pub mod run;
pub mod verify;

use thiserror::Error;

/// Everything that ends a CLI invocation early, mapped to exit codes by
/// [`CliError::exit_code`].
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The library rejected the data (comp1 non-convergence, invalid map).
    #[error("{0}")]
    Data(#[from] smgauge::Error),
    #[error("run aborted after {rows} diagnostics rows: {cause}")]
    Aborted { rows: usize, cause: smgauge::Error },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("{failed} verification check(s) failed")]
    VerifyFailed { failed: usize },
}

impl CliError {
    /// 1 config/data or failed verification, 2 numerical abort or usage,
    /// 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Data(_) | CliError::VerifyFailed { .. } => 1,
            CliError::Aborted { .. } | CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}
