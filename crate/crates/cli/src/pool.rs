//! Worker-pool construction. `EARLYSTOP_THREADS` caps parallelism; results
//! are always aggregated in trial order, so the thread count never changes
//! the output bytes.

use crate::{CliError, Result};

pub const THREADS_ENV: &str = "EARLYSTOP_THREADS";

pub fn build_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))
            })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}
