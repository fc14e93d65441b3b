use rayon::prelude::*;
use simpair_core::{sort_evaluations, Dataset, PairEvaluation, ScanConfig, ScanPlan};

use crate::{Error, Result};

/// Evaluates every ordered pair of `vars` on `jobs` worker threads.
///
/// The result is sorted, so it does not depend on `jobs`.
pub fn parallel_scan(d: &Dataset, cfg: &ScanConfig, vars: &[String], jobs: usize) -> Result<Vec<PairEvaluation>> {
    if jobs == 0 {
        return Err(Error::Usage("--jobs must be at least 1".into()));
    }
    let plan = ScanPlan::new(d, cfg, vars)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    let pairs = plan.pairs();
    let mut evals: Vec<PairEvaluation> =
        pool.install(|| pairs.par_iter().map(|&(p, c)| plan.evaluate(p, c)).collect());
    sort_evaluations(&mut evals);
    Ok(evals)
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
