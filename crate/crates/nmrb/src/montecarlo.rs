//! Parallel Monte Carlo estimate of the average sequence fidelity.
//!
//! Every `(m, index)` sample draws from its own stream, so the result does not
//! depend on scheduling or thread count and matches the sequential estimator.
use nmrb_core::rb::{survival_sample, AsfCurve, ExperimentConfig};
use rayon::prelude::*;

pub fn estimate_asf_parallel(cfg: &ExperimentConfig) -> nmrb_core::Result<AsfCurve> {
    cfg.validate()?;
    let lengths = cfg.lengths();
    let rows = lengths
        .par_iter()
        .map(|&m| (0..cfg.n_samples).into_par_iter().map(|i| survival_sample(cfg, m, i)).collect::<nmrb_core::Result<Vec<f64>>>())
        .collect::<nmrb_core::Result<Vec<_>>>()?;
    AsfCurve::from_samples(lengths, &rows)
}
