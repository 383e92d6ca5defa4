//! Multi-threaded Monte Carlo driver. Batches own fixed RNG substreams, so
//! the merged streams do not depend on the number of worker threads.

use homsim_core::montecarlo::{merge_batches, simulate_batch, SimConfig, SimCounters, TimeTagStream};
use rayon::prelude::*;

pub fn generate_streams(cfg: &SimConfig) -> homsim_core::Result<(TimeTagStream, TimeTagStream, SimCounters)> {
    cfg.validate()?;
    let batches: Vec<_> = (0..cfg.n_batches()).into_par_iter().map(|b| simulate_batch(cfg, b)).collect();
    merge_batches(cfg, batches)
}
