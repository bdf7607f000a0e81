//! Worker-count control. Results never depend on the worker count: parallel
//! sections write disjoint outputs and reduce in a fixed order.

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "SPECTRO_THREADS";

/// Worker cap from `SPECTRO_THREADS`; `0` or unset means automatic.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(s) if s.trim().is_empty() => Ok(0),
        Ok(s) => s.trim().parse().map_err(|_| {
            Error::param(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{s}`"
            ))
        }),
    }
}

/// Run `f` on a dedicated pool of `threads` workers (`0` = automatic).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
