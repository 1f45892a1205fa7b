//! Optimal control with the pointwise state bound y <= 0.68.

use pdextra::experiment::{run_single, ExperimentConfig, FULL_ACCELERATION};
use pdextra::Family;

fn main() -> pdextra::Result<()> {
    let cfg = ExperimentConfig {
        mu: FULL_ACCELERATION,
        ..ExperimentConfig::defaults(Family::State)
    };
    let result = run_single(&cfg, 0)?;
    let problem = &result.problem;
    let u = &result.output.state.u;
    let y = &result.output.state.y;
    let report = problem.strict_complementarity(&result.output.state.p)?;

    println!(
        "final J_gamma        {:e}",
        result.output.records.last().unwrap().j_gamma
    );
    println!("max (S(u) - c)+      {:e}", problem.feasibility_metric(u)?);
    println!(
        "max S(u)             {:.6}",
        y.iter().cloned().fold(f64::MIN, f64::max)
    );
    println!("degenerate measure   {:e}", report.degenerate_measure);
    println!(
        "settled after        {} iterations",
        result.settle_iteration()
    );
    Ok(())
}
