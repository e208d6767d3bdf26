//! Multi-threaded strong-error studies.
//!
//! Samples are independent work units. Per-sample results are collected in
//! sample order before the reduction, so the report is bit-identical for any
//! thread count.

use acsolve_core::experiments::sample_squared_errors;
use acsolve_core::{ErrorReport, RunConfig};
use rayon::prelude::*;

use crate::CliError;

/// Runs the study on `threads` worker threads (`0` = one per core).
pub fn run_study(config: &RunConfig, threads: usize) -> Result<ErrorReport, CliError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    let per_sample = pool.install(|| {
        (0..config.samples)
            .into_par_iter()
            .map(|s| sample_squared_errors(config, s))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(ErrorReport::from_squared_errors(&config.resolutions, &per_sample)?)
}
