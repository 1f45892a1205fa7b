use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use pdextra::experiment::{self, Overrides};
use pdextra::Family;

/// Accelerated primal-dual extragradient runs on 1D coefficient problems.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Model problem.
    #[arg(long, value_parser = ["l1", "linf", "state"])]
    problem: Option<String>,
    /// Named sweep, e.g. l1-accel, linf-mesh, state-gamma.
    #[arg(long)]
    preset: Option<String>,
    /// Flat key=value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of elements.
    #[arg(long)]
    n: Option<usize>,
    /// Moreau-Yosida parameter.
    #[arg(long)]
    gamma: Option<f64>,
    /// Acceleration parameter, below 1.
    #[arg(long)]
    mu: Option<f64>,
    /// Fidelity weight (l1) or control cost (state).
    #[arg(long)]
    alpha: Option<f64>,
    /// Noise level (l1) or fitting tolerance (linf).
    #[arg(long)]
    delta: Option<f64>,
    /// Corruption probability of impulsive noise (l1).
    #[arg(long)]
    noise_rate: Option<f64>,
    /// Quantization bins (linf).
    #[arg(long)]
    nbins: Option<usize>,
    /// State bound (state).
    #[arg(long)]
    cbound: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    /// Accelerated iterations, defaults to --iters.
    #[arg(long)]
    accel_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Use noise-free data.
    #[arg(long)]
    clean: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only summarize the logs already in --out.
    #[arg(long)]
    summarize: bool,
}

impl Args {
    fn overrides(&self) -> Result<Overrides, pdextra::Error> {
        Ok(Overrides {
            preset: self.preset.clone(),
            family: self
                .problem
                .as_deref()
                .map(str::parse::<Family>)
                .transpose()?,
            n: self.n,
            gamma: self.gamma,
            mu: self.mu,
            alpha: self.alpha,
            delta: self.delta,
            noise_rate: self.noise_rate,
            nbins: self.nbins,
            cbound: self.cbound,
            iters: self.iters,
            accel_iters: self.accel_iters,
            seed: self.seed,
            replicates: self.replicates,
            out: self.out.clone(),
            clean: self.clean.then_some(true),
        })
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: &Args) -> Result<(), pdextra::Error> {
    let mut overrides = match &args.config {
        Some(path) => Overrides::load(path)?,
        None => Overrides::default(),
    };
    overrides = overrides.merge(args.overrides()?);
    let out = overrides
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results"));

    if !args.summarize {
        let configs = experiment::resolve(&overrides)?;
        let written = experiment::run_experiment(&configs, &out)?;
        for path in written.runs.iter().chain(&written.averages) {
            println!("wrote {}", path.display());
        }
    }
    let rows = experiment::summarize(&experiment::logs_in(&out)?)?;
    print!("{}", experiment::write_summary(&out, &rows)?);
    Ok(())
}
