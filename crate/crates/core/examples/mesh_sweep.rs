//! Iterations needed to settle within 1% of the final functional value for
//! several mesh sizes, averaged over noise realizations.

use pdextra::experiment::{
    mean_curve, run_single, settle_iteration, ExperimentConfig, SETTLE_FRACTION,
};
use pdextra::Family;
use rayon::prelude::*;

fn main() -> pdextra::Result<()> {
    let family: Family = std::env::args().nth(1).as_deref().unwrap_or("l1").parse()?;
    let replicates = if family == Family::L1 { 10 } else { 1 };
    for n in [100, 1000, 10_000] {
        let cfg = ExperimentConfig {
            n,
            replicates,
            ..ExperimentConfig::defaults(family)
        };
        let curves = (0..replicates)
            .into_par_iter()
            .map(|r| run_single(&cfg, r).map(|res| res.j_values()))
            .collect::<pdextra::Result<Vec<_>>>()?;
        let mean = mean_curve(&curves);
        println!(
            "{family} n = {n:>5}: mean final J = {:.6e}, settled after {}",
            mean.last().unwrap(),
            settle_iteration(&mean, SETTLE_FRACTION)
        );
    }
    Ok(())
}
