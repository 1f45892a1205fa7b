//! L¹ fitting of impulsive-noise data with and without acceleration.
//!
//! `cargo run --release --example l1_fitting -- [out-dir]` also writes the
//! convergence logs.

use pdextra::experiment::{run_experiment, run_single, summarize, summary_text, Preset};

fn main() -> pdextra::Result<()> {
    let preset = Preset::parse("l1-accel")?;
    let configs = preset.expand(&preset.base());
    for cfg in &configs {
        let result = run_single(cfg, 0)?;
        let last = result.output.records.last().unwrap();
        println!(
            "mu = {:<20} J0 = {:.6}  J_N = {:.6}  settled after {} of {} iterations",
            cfg.mu,
            result.output.j_initial,
            last.j_gamma,
            result.settle_iteration(),
            cfg.iters
        );
    }
    if let Some(dir) = std::env::args().nth(1) {
        let written = run_experiment(&configs, dir.as_ref())?;
        print!("{}", summary_text(&summarize(&written.runs)?));
    }
    Ok(())
}
