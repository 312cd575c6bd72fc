//! Command-line driver for multi-model mimicry: run configuration, the
//! `mmm`, `pbcm`, `baselines` and `simulate` pipelines, and result files.

pub mod commands;
pub mod config;
mod error;
pub mod io;
pub mod report;

pub use commands::{
    classify_matrices, cmd_baselines, cmd_mmm, cmd_pbcm, cmd_simulate, read_gof_matrices,
    run_baselines, run_mmm, run_pbcm,
};
pub use config::{LoadedConfig, RunConfig, StatisticConfig};
pub use error::CliError;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "MIMICRY_THREADS";

/// Runs `f` on a pool capped by `MIMICRY_THREADS`, or on the default pool
/// when the variable is unset.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let cap = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Some(n),
            _ => {
                return Err(CliError::Config(format!(
                    "{THREADS_ENV} must be a positive integer, got `{v}`"
                )))
            }
        },
        Err(_) => None,
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = cap {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
        return Ok(pool.install(f));
    }
    let _ = cap;
    Ok(f())
}
