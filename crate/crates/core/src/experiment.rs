//! Experiment configuration, presets and CSV convergence logs.
//!
//! A log file starts with `#`-prefixed `key=value` lines describing the run,
//! followed by a CSV table with the columns of [`CSV_COLUMNS`]. Floats are
//! written in shortest round-trip form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::engine::{self, AccelMode, IterateRecord, RunOutput, StepSchedule};
use crate::error::{Error, Result};
use crate::fem1d::{ElementField, Mesh1D, NodalField};
use crate::problems::{self, Family, NoiseConfig, NoiseKind, ProblemParams, ProblemSpec, StepInit};

/// `μ = 1 − 10⁻¹⁶`, full acceleration just below the strong convexity
/// constant of `G`.
pub const FULL_ACCELERATION: f64 = 1.0 - 1e-16;

pub const CSV_COLUMNS: [&str; 8] = [
    "iter",
    "J_gamma",
    "tau",
    "sigma",
    "omega",
    "primal_change",
    "feasibility",
    "wall_time_ms",
];

/// Relative distance to the final functional value used by the summaries.
pub const SETTLE_FRACTION: f64 = 0.01;

/// Everything needed to reproduce one convergence curve (and its
/// replicates).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n: usize,
    pub gamma: f64,
    pub mu: f64,
    /// Fidelity weight (L¹) or control cost (state).
    pub alpha: f64,
    /// Noise level (L¹) or fitting tolerance (L∞; half the quantization
    /// step when unset).
    pub delta: Option<f64>,
    /// Corruption probability of the impulsive noise.
    pub noise_rate: f64,
    pub nbins: usize,
    pub cbound: f64,
    pub iters: usize,
    /// Accelerated iterations; defaults to `iters`.
    pub accel_iters: Option<usize>,
    pub seed: u64,
    pub replicates: usize,
    /// Use the exact state as data (no noise, no quantization).
    pub clean: bool,
}

impl ExperimentConfig {
    /// Standard setup for each model problem.
    pub fn defaults(family: Family) -> Self {
        let base = Self {
            family,
            n: 1000,
            gamma: 1e-12,
            mu: FULL_ACCELERATION,
            alpha: 1e-2,
            delta: None,
            noise_rate: 0.3,
            nbins: problems::DEFAULT_BINS,
            cbound: 0.68,
            iters: 10_000,
            accel_iters: None,
            seed: 1,
            replicates: 1,
            clean: false,
        };
        match family {
            Family::L1 => Self {
                iters: 1000,
                delta: Some(0.1),
                ..base
            },
            Family::Linf => base,
            Family::State => Self {
                alpha: 1e-12,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n < 2 {
            return fail(format!("--n must be at least 2, got {}", self.n));
        }
        if self.iters < 1 {
            return fail("--iters must be at least 1".into());
        }
        if self.replicates < 1 {
            return fail("--replicates must be at least 1".into());
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return fail(format!("--gamma must be >= 0, got {}", self.gamma));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return fail(format!("--mu must be >= 0, got {}", self.mu));
        }
        if self.mu >= 1.0 {
            return fail(format!(
                "--mu must stay below 1 (strong convexity constant of G), got {}",
                self.mu
            ));
        }
        if self.family != Family::Linf && !(self.alpha > 0.0) {
            return fail(format!("--alpha must be > 0, got {}", self.alpha));
        }
        if let Some(d) = self.delta {
            if !(d >= 0.0 && d.is_finite()) || (self.family == Family::Linf && d == 0.0) {
                return fail(format!("--delta out of range: {d}"));
            }
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return fail(format!(
                "--noise-rate must lie in [0, 1], got {}",
                self.noise_rate
            ));
        }
        if self.nbins < 2 {
            return fail(format!("--nbins must be at least 2, got {}", self.nbins));
        }
        if !self.cbound.is_finite() {
            return fail("--cbound must be finite".into());
        }
        Ok(())
    }

    pub fn accel_iters(&self) -> usize {
        self.accel_iters.unwrap_or(self.iters)
    }

    /// Short file-name friendly identifier.
    pub fn label(&self) -> String {
        format!(
            "{}_n{}_gamma{:e}_mu{}",
            self.family,
            self.n,
            self.gamma,
            if self.mu == 0.0 {
                "0".to_string()
            } else if self.mu == FULL_ACCELERATION {
                "full".to_string()
            } else {
                format!("{:e}", self.mu)
            }
        )
    }

    pub fn noise(&self, replicate: usize) -> NoiseConfig {
        let kind = match (self.clean, self.family) {
            (true, _) | (false, Family::State) => NoiseKind::None,
            (false, Family::L1) => NoiseKind::Impulsive {
                rate: self.noise_rate,
                level: self.delta.unwrap_or(0.1),
            },
            (false, Family::Linf) => NoiseKind::Quantize { bins: self.nbins },
        };
        NoiseConfig {
            kind,
            seed: self.seed,
            stream: replicate as u64,
        }
    }

    pub fn params(&self) -> ProblemParams {
        ProblemParams {
            alpha: self.alpha,
            gamma: self.gamma,
            delta: match self.family {
                Family::Linf => self.delta,
                _ => None,
            },
            bound: self.cbound,
        }
    }

    pub fn build_problem(&self, replicate: usize) -> Result<ProblemSpec> {
        self.validate()?;
        let mut params = self.params();
        if self.family == Family::Linf && params.delta.is_none() && self.clean {
            // keep the tolerance of the quantized setup for clean data
            let truth = problems::make_truth(&Mesh1D::new(self.n)?)?;
            params.delta = Some(0.5 * problems::quantization_step(&truth.y, self.nbins));
        }
        problems::make_problem(
            self.family,
            Mesh1D::new(self.n)?,
            &params,
            &self.noise(replicate),
        )
    }

    fn header_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("problem", self.family.to_string()),
            ("n", self.n.to_string()),
            ("gamma", fmt_f64(self.gamma)),
            ("mu", fmt_f64(self.mu)),
            ("alpha", fmt_f64(self.alpha)),
            (
                "delta",
                self.delta.map(fmt_f64).unwrap_or_else(|| "auto".into()),
            ),
            ("noise_rate", fmt_f64(self.noise_rate)),
            ("nbins", self.nbins.to_string()),
            ("cbound", fmt_f64(self.cbound)),
            ("iters", self.iters.to_string()),
            ("accel_iters", self.accel_iters().to_string()),
            ("seed", self.seed.to_string()),
            ("replicates", self.replicates.to_string()),
            ("clean", self.clean.to_string()),
        ]
    }
}

/// Optional settings, as read from a config file or the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<String>,
    pub family: Option<Family>,
    pub n: Option<usize>,
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub noise_rate: Option<f64>,
    pub nbins: Option<usize>,
    pub cbound: Option<f64>,
    pub iters: Option<usize>,
    pub accel_iters: Option<usize>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub out: Option<PathBuf>,
    pub clean: Option<bool>,
}

impl Overrides {
    /// Values set in `other` win.
    pub fn merge(self, other: Overrides) -> Overrides {
        Overrides {
            preset: other.preset.or(self.preset),
            family: other.family.or(self.family),
            n: other.n.or(self.n),
            gamma: other.gamma.or(self.gamma),
            mu: other.mu.or(self.mu),
            alpha: other.alpha.or(self.alpha),
            delta: other.delta.or(self.delta),
            noise_rate: other.noise_rate.or(self.noise_rate),
            nbins: other.nbins.or(self.nbins),
            cbound: other.cbound.or(self.cbound),
            iters: other.iters.or(self.iters),
            accel_iters: other.accel_iters.or(self.accel_iters),
            seed: other.seed.or(self.seed),
            replicates: other.replicates.or(self.replicates),
            out: other.out.or(self.out),
            clean: other.clean.or(self.clean),
        }
    }

    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        set!(n, gamma, mu, alpha, noise_rate, nbins, cbound, iters, seed, replicates, clean);
        if self.delta.is_some() {
            cfg.delta = self.delta;
        }
        if self.accel_iters.is_some() {
            cfg.accel_iters = self.accel_iters;
        }
    }

    /// Parses a flat `key=value` file. Blank lines and `#` comments are
    /// ignored; keys are the long flag names without the leading dashes.
    pub fn parse_config(text: &str, path: &Path) -> Result<Overrides> {
        let mut out = Overrides::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("cannot parse `{v}`"))
            }
            let res: std::result::Result<(), String> = (|| {
                match key {
                    "preset" => out.preset = Some(value.to_string()),
                    "problem" => {
                        out.family = Some(value.parse().map_err(|e: Error| e.to_string())?)
                    }
                    "n" => out.n = Some(num(value)?),
                    "gamma" => out.gamma = Some(num(value)?),
                    "mu" => out.mu = Some(num(value)?),
                    "alpha" => out.alpha = Some(num(value)?),
                    "delta" => out.delta = Some(num(value)?),
                    "noise-rate" => out.noise_rate = Some(num(value)?),
                    "nbins" => out.nbins = Some(num(value)?),
                    "cbound" => out.cbound = Some(num(value)?),
                    "iters" => out.iters = Some(num(value)?),
                    "accel-iters" => out.accel_iters = Some(num(value)?),
                    "seed" => out.seed = Some(num(value)?),
                    "replicates" => out.replicates = Some(num(value)?),
                    "out" => out.out = Some(PathBuf::from(value)),
                    "clean" => out.clean = Some(num(value)?),
                    other => return Err(format!("unknown key `{other}`")),
                }
                Ok(())
            })();
            res.map_err(err)?;
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Overrides> {
        let text = fs::read_to_string(path)?;
        Self::parse_config(&text, path)
    }
}

/// What a preset varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// `μ = 0` against full acceleration.
    Acceleration,
    /// Mesh sizes 100, 1000 and 10000.
    Mesh,
    /// `γ ∈ {1e-1, 1e-3, 1e-6}`, each with and without acceleration.
    Gamma,
}

/// Named experiment: a problem plus a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub family: Family,
    pub sweep: Sweep,
}

pub const PRESET_NAMES: [&str; 9] = [
    "l1-accel",
    "l1-mesh",
    "l1-gamma",
    "linf-accel",
    "linf-mesh",
    "linf-gamma",
    "state-accel",
    "state-mesh",
    "state-gamma",
];

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        let (family, sweep) = name.rsplit_once('-').ok_or_else(|| unknown_preset(name))?;
        let family: Family = family.parse().map_err(|_| unknown_preset(name))?;
        let sweep = match sweep {
            "accel" => Sweep::Acceleration,
            "mesh" => Sweep::Mesh,
            "gamma" => Sweep::Gamma,
            _ => return Err(unknown_preset(name)),
        };
        Ok(Self { family, sweep })
    }

    pub fn name(&self) -> String {
        let sweep = match self.sweep {
            Sweep::Acceleration => "accel",
            Sweep::Mesh => "mesh",
            Sweep::Gamma => "gamma",
        };
        format!("{}-{}", self.family, sweep)
    }

    /// Base configuration before command-line overrides.
    pub fn base(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(self.family);
        if self.family == Family::L1 && self.sweep == Sweep::Mesh {
            cfg.replicates = 10;
        }
        cfg
    }

    /// Expands the sweep around `base`.
    pub fn expand(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        let with = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = base.clone();
            f(&mut c);
            c
        };
        match self.sweep {
            Sweep::Acceleration => [0.0, FULL_ACCELERATION]
                .iter()
                .map(|&mu| with(&|c| c.mu = mu))
                .collect(),
            Sweep::Mesh => [100, 1000, 10_000]
                .iter()
                .map(|&n| with(&|c| c.n = n))
                .collect(),
            Sweep::Gamma => [1e-1, 1e-3, 1e-6]
                .iter()
                .flat_map(|&gamma| {
                    [0.0, FULL_ACCELERATION].map(|mu| {
                        with(&|c| {
                            c.gamma = gamma;
                            c.mu = mu;
                        })
                    })
                })
                .collect(),
        }
    }
}

fn unknown_preset(name: &str) -> Error {
    Error::Config(format!(
        "unknown preset `{name}` (available: {})",
        PRESET_NAMES.join(", ")
    ))
}

/// Resolves presets, config file values and flags into the list of runs.
pub fn resolve(overrides: &Overrides) -> Result<Vec<ExperimentConfig>> {
    let configs = match &overrides.preset {
        Some(name) => {
            let preset = Preset::parse(name)?;
            if overrides.family.is_some_and(|f| f != preset.family) {
                return Err(Error::Config(format!(
                    "preset `{name}` conflicts with --problem {}",
                    overrides.family.unwrap()
                )));
            }
            let mut base = preset.base();
            overrides.apply(&mut base);
            preset.expand(&base)
        }
        None => {
            let family = overrides
                .family
                .ok_or_else(|| Error::Config("either --problem or --preset is required".into()))?;
            let mut cfg = ExperimentConfig::defaults(family);
            overrides.apply(&mut cfg);
            vec![cfg]
        }
    };
    for cfg in &configs {
        cfg.validate()?;
    }
    Ok(configs)
}

/// A completed run together with the problem it solved.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub replicate: usize,
    pub problem: ProblemSpec,
    pub init: StepInit,
    pub output: RunOutput,
}

impl RunResult {
    pub fn j_values(&self) -> Vec<f64> {
        self.output.records.iter().map(|r| r.j_gamma).collect()
    }

    /// Iteration after which `J_γ` stays within 1% of its final value.
    pub fn settle_iteration(&self) -> usize {
        settle_iteration(&self.j_values(), SETTLE_FRACTION)
    }
}

/// Runs one replicate from `u⁰ ≡ 1`, `p⁰ ≡ 0`, with the step lengths from
/// the Lipschitz estimate and acceleration on the strongly convex `G`.
pub fn run_single(cfg: &ExperimentConfig, replicate: usize) -> Result<RunResult> {
    run_single_with(cfg, replicate, |_, _| {})
}

/// [`run_single`] with a per-iteration observer.
pub fn run_single_with<F>(cfg: &ExperimentConfig, replicate: usize, observe: F) -> Result<RunResult>
where
    F: FnMut(&engine::IterateState, &IterateRecord),
{
    let problem = cfg.build_problem(replicate)?;
    let u0 = ElementField::constant(&problem.mesh, 1.0);
    let p0 = NodalField::constant(&problem.mesh, 0.0);
    let init = problem.lipschitz_estimate(&u0)?;
    let schedule = StepSchedule::new(
        init.tau0,
        init.sigma0,
        cfg.mu,
        AccelMode::G,
        cfg.accel_iters(),
    )?;
    let output = engine::run_with(&problem, schedule, u0, p0, cfg.iters, observe)?;
    Ok(RunResult {
        config: cfg.clone(),
        replicate,
        problem,
        init,
        output,
    })
}

/// Smallest `i` (1-based) with `|J_k − J_N| ≤ frac·|J_N|` for every `k ≥ i`.
pub fn settle_iteration(values: &[f64], frac: f64) -> usize {
    let Some(&last) = values.last() else {
        return 0;
    };
    let tol = frac * last.abs();
    values
        .iter()
        .rposition(|v| (v - last).abs() > tol)
        .map_or(1, |k| k + 2)
}

/// Pointwise mean of several equally long curves.
pub fn mean_curve(curves: &[Vec<f64>]) -> Vec<f64> {
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / curves.len() as f64)
        .collect()
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Renders one convergence log.
pub fn render_csv(header: &[(&str, String)], records: &[IterateRecord]) -> String {
    let mut s = String::new();
    for (k, v) in header {
        let _ = writeln!(s, "# {k}={v}");
    }
    s.push_str(&CSV_COLUMNS.join(","));
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.i,
            fmt_f64(r.j_gamma),
            fmt_f64(r.tau),
            fmt_f64(r.sigma),
            fmt_f64(r.omega),
            fmt_f64(r.primal_change),
            fmt_f64(r.feasibility),
            fmt_f64(r.wall_time_ms)
        );
    }
    s
}

fn run_header(result: &RunResult) -> Vec<(&'static str, String)> {
    let mut h = result.config.header_pairs();
    h.push(("replicate", result.replicate.to_string()));
    h.push(("rng", problems::RNG_DESCRIPTION.to_string()));
    h.push(("accel_mode", AccelMode::G.name().to_string()));
    h.push(("L_tilde", fmt_f64(result.init.lipschitz)));
    h.push(("tau0", fmt_f64(result.init.tau0)));
    h.push(("sigma0", fmt_f64(result.init.sigma0)));
    h.push(("J0", fmt_f64(result.output.j_initial)));
    if let Some(step) = result.problem.quantization_step {
        h.push(("quantization_step", fmt_f64(step)));
    }
    if let crate::prox::Conjugate::Linf { delta } = result.problem.fidelity.kind {
        h.push(("fit_tolerance", fmt_f64(delta)));
    }
    h
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub runs: Vec<PathBuf>,
    pub averages: Vec<PathBuf>,
}

/// Runs every configuration and replicate (in parallel), writing one CSV per
/// run and, for configurations with several replicates, a `_mean.csv` with
/// the per-iteration averages.
pub fn run_experiment(configs: &[ExperimentConfig], out_dir: &Path) -> Result<ExperimentOutput> {
    fs::create_dir_all(out_dir)?;
    let jobs: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(c, cfg)| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();
    let results: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(c, r)| {
            run_single(&configs[c], r).map_err(|e| {
                Error::Config(format!(
                    "run {} replicate {r} failed: {e}",
                    configs[c].label()
                ))
            })
        })
        .collect::<Result<_>>()?;

    let mut output = ExperimentOutput::default();
    let mut by_config: BTreeMap<usize, Vec<&RunResult>> = BTreeMap::new();
    for (&(c, _), result) in jobs.iter().zip(&results) {
        let path = out_dir.join(format!(
            "{}_r{}.csv",
            result.config.label(),
            result.replicate
        ));
        fs::write(
            &path,
            render_csv(&run_header(result), &result.output.records),
        )?;
        output.runs.push(path);
        by_config.entry(c).or_default().push(result);
    }
    for (c, group) in by_config {
        if group.len() < 2 {
            continue;
        }
        let records = average_records(&group);
        let mut header = configs[c].header_pairs();
        header.push(("averaged_replicates", group.len().to_string()));
        header.push(("rng", problems::RNG_DESCRIPTION.to_string()));
        let path = out_dir.join(format!("{}_mean.csv", configs[c].label()));
        fs::write(&path, render_csv(&header, &records))?;
        output.averages.push(path);
    }
    Ok(output)
}

fn average_records(group: &[&RunResult]) -> Vec<IterateRecord> {
    let k = group.len() as f64;
    let len = group
        .iter()
        .map(|r| r.output.records.len())
        .min()
        .unwrap_or(0);
    (0..len)
        .map(|i| {
            let mean = |f: &dyn Fn(&IterateRecord) -> f64| {
                group.iter().map(|r| f(&r.output.records[i])).sum::<f64>() / k
            };
            IterateRecord {
                i: i + 1,
                j_gamma: mean(&|r| r.j_gamma),
                tau: mean(&|r| r.tau),
                sigma: mean(&|r| r.sigma),
                omega: mean(&|r| r.omega),
                primal_change: mean(&|r| r.primal_change),
                feasibility: mean(&|r| r.feasibility),
                wall_time_ms: mean(&|r| r.wall_time_ms),
            }
        })
        .collect()
}

/// A convergence log read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLog {
    pub path: PathBuf,
    pub header: Vec<(String, String)>,
    pub records: Vec<IterateRecord>,
}

impl ConvergenceLog {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        let mut header = Vec::new();
        let mut records = Vec::new();
        let mut seen_columns = false;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    header.push((k.to_string(), v.to_string()));
                }
                continue;
            }
            if !seen_columns {
                if line != CSV_COLUMNS.join(",") {
                    return Err(err(lineno, format!("unexpected column header `{line}`")));
                }
                seen_columns = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != CSV_COLUMNS.len() {
                return Err(err(
                    lineno,
                    format!(
                        "expected {} fields, found {}",
                        CSV_COLUMNS.len(),
                        fields.len()
                    ),
                ));
            }
            let i: usize = fields[0]
                .parse()
                .map_err(|_| err(lineno, format!("bad iteration index `{}`", fields[0])))?;
            if i != records.len() + 1 {
                return Err(err(lineno, format!("iteration {i} out of sequence")));
            }
            let mut vals = [0.0; 7];
            for (slot, (field, name)) in vals
                .iter_mut()
                .zip(fields[1..].iter().zip(&CSV_COLUMNS[1..]))
            {
                *slot = field
                    .parse()
                    .map_err(|_| err(lineno, format!("bad {name} value `{field}`")))?;
            }
            records.push(IterateRecord {
                i,
                j_gamma: vals[0],
                tau: vals[1],
                sigma: vals[2],
                omega: vals[3],
                primal_change: vals[4],
                feasibility: vals[5],
                wall_time_ms: vals[6],
            });
        }
        if !seen_columns {
            return Err(err(
                text.lines().count().max(1),
                "missing column header".into(),
            ));
        }
        if records.is_empty() {
            return Err(err(text.lines().count().max(1), "no data rows".into()));
        }
        Ok(Self {
            path: path.to_owned(),
            header,
            records,
        })
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Per-run summary line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub iterations: usize,
    pub final_j: f64,
    pub settle_iteration: usize,
    pub final_feasibility: f64,
    pub total_wall_ms: f64,
}

impl RunSummary {
    pub fn from_records(name: impl Into<String>, records: &[IterateRecord]) -> Self {
        let j: Vec<f64> = records.iter().map(|r| r.j_gamma).collect();
        let last = records.last();
        Self {
            name: name.into(),
            iterations: records.len(),
            final_j: last.map_or(f64::NAN, |r| r.j_gamma),
            settle_iteration: settle_iteration(&j, SETTLE_FRACTION),
            final_feasibility: last.map_or(f64::NAN, |r| r.feasibility),
            total_wall_ms: records.iter().map(|r| r.wall_time_ms).sum(),
        }
    }
}

/// Summarizes logs, ordered by how fast they settle.
pub fn summarize(paths: &[PathBuf]) -> Result<Vec<RunSummary>> {
    let mut rows = paths
        .iter()
        .map(|p| {
            let log = ConvergenceLog::read(p)?;
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(RunSummary::from_records(name, &log.records))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.settle_iteration
            .cmp(&b.settle_iteration)
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(rows)
}

/// All `.csv` logs in a directory, excluding summaries.
pub fn logs_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "csv")
                && p.file_stem().is_some_and(|s| s != "summary")
        })
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn summary_text(rows: &[RunSummary]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut s = format!(
        "{:<width$}  {:>6}  {:>22}  {:>8}  {:>22}  {:>12}\n",
        "run", "iters", "final J_gamma", "settle", "final feasibility", "wall [ms]"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<width$}  {:>6}  {:>22}  {:>8}  {:>22}  {:>12.1}",
            r.name,
            r.iterations,
            format!("{:e}", r.final_j),
            r.settle_iteration,
            format!("{:e}", r.final_feasibility),
            r.total_wall_ms
        );
    }
    s
}

pub fn summary_csv(rows: &[RunSummary]) -> String {
    let mut s = String::from(
        "run,iterations,final_J_gamma,settle_iteration,final_feasibility,total_wall_ms\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.name,
            r.iterations,
            fmt_f64(r.final_j),
            r.settle_iteration,
            fmt_f64(r.final_feasibility),
            fmt_f64(r.total_wall_ms)
        );
    }
    s
}

/// Writes `summary.txt` and `summary.csv` into `dir` and returns the text.
pub fn write_summary(dir: &Path, rows: &[RunSummary]) -> Result<String> {
    let text = summary_text(rows);
    fs::write(dir.join("summary.txt"), &text)?;
    fs::write(dir.join("summary.csv"), summary_csv(rows))?;
    Ok(text)
}

/// CSV body without the `#` header and the wall-time column.
pub fn deterministic_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| match l.rsplit_once(',') {
            Some((head, _)) => head,
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settle_definition() {
        assert_eq!(settle_iteration(&[5.0, 3.0, 2.0, 1.0], 0.01), 4);
        assert_eq!(settle_iteration(&[1.0, 1.0, 1.0], 0.01), 1);
        assert_eq!(settle_iteration(&[3.0, 1.005, 2.0, 1.0, 1.001], 0.01), 4);
        assert_eq!(settle_iteration(&[], 0.01), 0);
    }

    #[test]
    fn preset_names_round_trip() {
        for name in PRESET_NAMES {
            assert_eq!(Preset::parse(name).unwrap().name(), name);
        }
        assert!(Preset::parse("l1-fast").is_err());
        assert!(Preset::parse("l2-accel").is_err());
    }

    #[test]
    fn l1_accel_preset() {
        let p = Preset::parse("l1-accel").unwrap();
        let runs = p.expand(&p.base());
        assert_eq!(runs.len(), 2);
        for r in &runs {
            assert_eq!(
                (r.family, r.n, r.gamma, r.alpha, r.iters),
                (Family::L1, 1000, 1e-12, 1e-2, 1000)
            );
        }
        assert_eq!(runs[0].mu, 0.0);
        assert_eq!(runs[1].mu, 1.0 - 1e-16);
    }

    #[test]
    fn mesh_and_gamma_presets() {
        let p = Preset::parse("l1-mesh").unwrap();
        let runs = p.expand(&p.base());
        assert_eq!(
            runs.iter().map(|r| r.n).collect::<Vec<_>>(),
            vec![100, 1000, 10_000]
        );
        assert!(runs.iter().all(|r| r.replicates == 10));
        let p = Preset::parse("linf-gamma").unwrap();
        let runs = p.expand(&p.base());
        assert_eq!(runs.len(), 6);
        assert!(runs.iter().all(|r| r.iters == 10_000));
        let p = Preset::parse("state-accel").unwrap();
        let base = p.base();
        assert_eq!(
            (base.alpha, base.gamma, base.cbound, base.iters),
            (1e-12, 1e-12, 0.68, 10_000)
        );
    }

    #[test]
    fn flags_override_file() {
        let file = Overrides::parse_config(
            "# c\nproblem = l1\nn=200\n\ngamma=1e-3\n",
            Path::new("x.cfg"),
        )
        .unwrap();
        let flags = Overrides {
            n: Some(50),
            ..Default::default()
        };
        let merged = file.merge(flags);
        let runs = resolve(&merged).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!((runs[0].n, runs[0].gamma), (50, 1e-3));
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let err = Overrides::parse_config("n=10\nbogus\n", Path::new("c.cfg")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = Overrides::parse_config("n=ten\n", Path::new("c.cfg")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = Overrides::parse_config("colour=red\n", Path::new("c.cfg")).unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }

    #[test]
    fn validation_messages() {
        let mut cfg = ExperimentConfig::defaults(Family::L1);
        cfg.replicates = 0;
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("--replicates"));
        let mut cfg = ExperimentConfig::defaults(Family::L1);
        cfg.mu = 1.0;
        assert!(cfg.validate().is_err());
        assert!(resolve(&Overrides::default()).is_err());
        let conflicting = Overrides {
            preset: Some("l1-accel".into()),
            family: Some(Family::State),
            ..Default::default()
        };
        assert!(resolve(&conflicting).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let records: Vec<IterateRecord> = (1..=3)
            .map(|i| IterateRecord {
                i,
                j_gamma: 1.0 / i as f64,
                tau: 0.99,
                sigma: 1e-12,
                omega: 1.0,
                primal_change: 0.1 * i as f64,
                feasibility: 0.0,
                wall_time_ms: 0.25,
            })
            .collect();
        let text = render_csv(&[("seed", "3".into())], &records);
        let log = ConvergenceLog::parse(&text, Path::new("t.csv")).unwrap();
        assert_eq!(log.records, records);
        assert_eq!(log.header_value("seed"), Some("3"));
    }

    #[test]
    fn malformed_csv_reports_line() {
        let text = "# a=b\niter,J_gamma,tau,sigma,omega,primal_change,feasibility,wall_time_ms\n1,1,1,1,1,1,1,1\n2,1,1,x,1,1,1,1\n";
        let err = ConvergenceLog::parse(text, Path::new("m.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let gap = "iter,J_gamma,tau,sigma,omega,primal_change,feasibility,wall_time_ms\n1,1,1,1,1,1,1,1\n3,1,1,1,1,1,1,1\n";
        let err = ConvergenceLog::parse(gap, Path::new("m.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = ConvergenceLog::parse("iter,J\n", Path::new("m.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn body_ignores_header_and_wall_time() {
        let a = "# t=1\niter,x,wall_time_ms\n1,2,3.5\n";
        let b = "# t=2\niter,x,wall_time_ms\n1,2,9.0\n";
        assert_eq!(deterministic_body(a), deterministic_body(b));
    }
}
