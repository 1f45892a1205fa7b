//! Sensitivity to the Moreau–Yosida parameter with and without acceleration.

use pdextra::experiment::{run_single, Preset};

fn main() -> pdextra::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "l1-gamma".into());
    let preset = Preset::parse(&name)?;
    println!(
        "{:>8}  {:>20}  {:>14}  {:>8}",
        "gamma", "mu", "final J", "settle"
    );
    for cfg in preset.expand(&preset.base()) {
        match run_single(&cfg, 0) {
            Ok(result) => println!(
                "{:>8.0e}  {:>20}  {:>14.6e}  {:>8}",
                cfg.gamma,
                cfg.mu,
                result.output.records.last().unwrap().j_gamma,
                result.settle_iteration()
            ),
            Err(e) => println!("{:>8.0e}  {:>20}  failed: {e}", cfg.gamma, cfg.mu),
        }
    }
    Ok(())
}
