//! Per-seed fan-out with failure isolation.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Runs `job` once per seed, concurrently, and returns results keyed by seed.
///
/// A failing or panicking job only marks its own seed. With `workers` set,
/// at most that many jobs run at once.
pub fn ensemble_over_paths<T, F>(
    seeds: &[u64],
    workers: Option<usize>,
    job: F,
) -> Result<BTreeMap<u64, Result<T, String>>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("seeds must be distinct"));
    }
    let run = |seed: u64| -> (u64, Result<T, String>) {
        let out = match catch_unwind(AssertUnwindSafe(|| job(seed))) {
            Ok(Ok(v)) => Ok(v),
            Ok(Err(e)) => Err(e.to_string()),
            Err(p) => Err(panic_message(p)),
        };
        (seed, out)
    };
    let results: Vec<(u64, Result<T, String>)> = match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| invalid(format!("worker pool: {e}")))?;
            pool.install(|| sorted.par_iter().map(|&s| run(s)).collect())
        }
        None => sorted.par_iter().map(|&s| run(s)).collect(),
    };
    Ok(results.into_iter().collect())
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".to_string()
    }
}
