//! Command-line front end: experiment runs, method comparison and Monte-Carlo
//! checks of the concentration bounds.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

pub use commands::{cmd_compare, cmd_run, cmd_verify_bounds, CompareReport, VerifyReport};
pub use config::{ExperimentConfig, Method, ProblemName};

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid configuration.
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    /// The command ran but a check it performs did not pass.
    #[error("check failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Failed(_) => 1,
        }
    }
}

impl From<colsafe_core::Error> for CliError {
    fn from(e: colsafe_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Caps the global worker pool at `COLSAFE_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("COLSAFE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("COLSAFE_THREADS must be a positive integer, got {raw:?}")))?;
    // A pool that already exists (e.g. in tests) keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
