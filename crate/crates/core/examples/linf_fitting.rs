//! L∞ fitting of quantized data: functional value and fit violation over the
//! iteration, without and with acceleration.

use pdextra::experiment::{run_single, Preset};

fn main() -> pdextra::Result<()> {
    let iters = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let preset = Preset::parse("linf-accel")?;
    let mut base = preset.base();
    if let Some(n) = iters {
        base.iters = n;
    }
    for cfg in preset.expand(&base) {
        let result = run_single(&cfg, 0)?;
        println!(
            "mu = {}  (tolerance {:.6e}, quantization step {:.6e})",
            cfg.mu,
            match result.problem.fidelity.kind {
                pdextra::Conjugate::Linf { delta } => delta,
                _ => unreachable!(),
            },
            result.problem.quantization_step.unwrap_or(f64::NAN)
        );
        let records = &result.output.records;
        for k in [1, 10, 100, 1000, 10_000]
            .into_iter()
            .filter(|&k| k <= records.len())
        {
            let r = &records[k - 1];
            println!(
                "  i = {k:>5}  J = {:14.6e}  violation = {:10.3e}",
                r.j_gamma, r.feasibility
            );
        }
    }
    Ok(())
}
