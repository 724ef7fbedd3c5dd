use rayon::prelude::*;

use crate::error::{Error, Result};

/// Evaluates `trial(t)` for `t in 0..trials`, returning results in trial
/// order. `workers = None` uses rayon's global pool.
pub fn run_trials<T, F>(trials: u64, workers: Option<usize>, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if trials == 0 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    let run = || (0..trials).into_par_iter().map(&trial).collect();
    match workers {
        None => Ok(run()),
        Some(0) => Err(Error::invalid("workers", "must be >= 1")),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?;
            Ok(pool.install(run))
        }
    }
}
