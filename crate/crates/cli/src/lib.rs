//! Campaign orchestration, configuration and report emission for the
//! `pprobe` command-line tool.

pub mod campaign;
pub mod commands;
pub mod config;
pub mod report;
pub mod seeds;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] pprobe_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// A check was unstable or an invariant failed.
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    /// Numerical or I/O failure.
    pub const RUNTIME: i32 = 3;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => exit::USAGE,
            CliError::Input(_) | CliError::Core(_) | CliError::Io(_) => exit::RUNTIME,
        }
    }
}

/// Builds the worker pool, honouring `PPROBE_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("PPROBE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("PPROBE_THREADS must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Config(e.to_string()))
}
