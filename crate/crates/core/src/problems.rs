//! The three model problems on the 1D elliptic forward model:
//! L¹ data fitting, L∞ data fitting and a state-constrained control problem.
//! All use `G(u) = ½‖u‖²`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::engine::Problem;
use crate::error::{Error, Result};
use crate::fem1d::{self, ElementField, Mesh1D, NodalField, Source};
use crate::prox::{self, Conjugate, ScalarProxSpec};

/// Description of the random number stream, written into experiment logs.
pub const RNG_DESCRIPTION: &str =
    "ChaCha20Rng(seed, stream=replicate) rand_chacha-0.9; uniform draw per node for corruption, \
     StandardNormal (ziggurat) rand_distr-0.5 for the noise value";

/// Number of quantization bins used to derive the default L∞ tolerance
/// when the data are not quantized.
pub const DEFAULT_BINS: usize = 11;

/// Exact coefficient `u†(x) = 2 − |x|`.
pub fn exact_coefficient(x: f64) -> f64 {
    2.0 - x.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    L1,
    Linf,
    State,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::L1, Family::Linf, Family::State];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::L1 => "l1",
            Family::Linf => "linf",
            Family::State => "state",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Family::L1),
            "linf" => Ok(Family::Linf),
            "state" => Ok(Family::State),
            other => Err(Error::Config(format!(
                "unknown problem `{other}` (expected l1, linf or state)"
            ))),
        }
    }
}

/// How the observation is derived from the exact state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    None,
    /// Each node is corrupted with probability `rate` by
    /// `‖y†‖ ξ`, `ξ ~ N(0, level²)`.
    Impulsive {
        rate: f64,
        level: f64,
    },
    /// Rounding to multiples of `(max y† − min y†)/bins`.
    Quantize {
        bins: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub seed: u64,
    /// Independent stream per replicate.
    pub stream: u64,
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            seed: 0,
            stream: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NoiseKind::Impulsive { rate, level } => {
                if !(0.0..=1.0).contains(&rate) {
                    return Err(Error::InvalidParameter(format!(
                        "corruption rate must lie in [0, 1], got {rate}"
                    )));
                }
                if !(level >= 0.0 && level.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "noise level must be >= 0, got {level}"
                    )));
                }
            }
            NoiseKind::Quantize { bins } if bins < 2 => {
                return Err(Error::InvalidParameter(format!(
                    "need at least 2 quantization bins, got {bins}"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Exact coefficient and the state it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub u: ElementField,
    pub y: NodalField,
}

pub fn make_truth(mesh: &Mesh1D) -> Result<Truth> {
    let u = ElementField::from_midpoints(mesh, exact_coefficient);
    let y = fem1d::forward_solve(mesh, &u, &Source::Constant(1.0))?;
    Ok(Truth { u, y })
}

/// Random-valued impulsive noise.
pub fn add_impulsive_noise(
    mesh: &Mesh1D,
    y_dag: &NodalField,
    rate: f64,
    level: f64,
    cfg: &NoiseConfig,
) -> NodalField {
    let scale = mesh.y_norm(y_dag);
    let mut rng = cfg.rng();
    NodalField::new(
        y_dag
            .iter()
            .map(|&y| {
                if rng.random::<f64>() < rate {
                    let xi: f64 = rng.sample(StandardNormal);
                    y + scale * level * xi
                } else {
                    y
                }
            })
            .collect(),
    )
}

/// Rounds to the nearest multiple of `y_s = (max y − min y)/bins`.
/// Returns the rounded field and `y_s`.
pub fn quantize(y_dag: &NodalField, bins: usize) -> Result<(NodalField, f64)> {
    if bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 quantization bins, got {bins}"
        )));
    }
    let step = quantization_step(y_dag, bins);
    if !(step > 0.0) {
        return Err(Error::ConstantData(step));
    }
    Ok((quantize_with_step(y_dag, step), step))
}

pub fn quantization_step(y: &NodalField, bins: usize) -> f64 {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    (hi - lo) / bins as f64
}

pub fn quantize_with_step(y: &NodalField, step: f64) -> NodalField {
    y.map(|v| step * (v / step).round())
}

/// Model parameters. `delta` is the L∞ fitting tolerance; when absent it
/// defaults to half the quantization step, the exact rounding bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: Option<f64>,
    pub bound: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            alpha: 1e-2,
            gamma: 1e-12,
            delta: None,
            bound: 0.68,
        }
    }
}

/// A model problem ready for [`crate::engine::run`].
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub family: Family,
    pub mesh: Mesh1D,
    /// Integrand of the fidelity; for the state family `yd` is taken per
    /// node from `data`.
    pub fidelity: ScalarProxSpec,
    /// Observation `y^δ` (fitting problems) or desired state `y^d`.
    pub data: NodalField,
    pub source: Source,
    pub truth: Truth,
    /// Quantization step of the data, if quantized.
    pub quantization_step: Option<f64>,
}

pub fn make_problem(
    family: Family,
    mesh: Mesh1D,
    params: &ProblemParams,
    noise: &NoiseConfig,
) -> Result<ProblemSpec> {
    noise.validate()?;
    let truth = make_truth(&mesh)?;
    let (data, quantization_step) = match (family, noise.kind) {
        (Family::State, _) | (_, NoiseKind::None) => (truth.y.clone(), None),
        (_, NoiseKind::Impulsive { rate, level }) => (
            add_impulsive_noise(&mesh, &truth.y, rate, level, noise),
            None,
        ),
        (_, NoiseKind::Quantize { bins }) => {
            let (q, step) = quantize(&truth.y, bins)?;
            (q, Some(step))
        }
    };
    let fidelity = match family {
        Family::L1 => ScalarProxSpec::l1(params.alpha, params.gamma)?,
        Family::Linf => {
            let delta = match (params.delta, quantization_step) {
                (Some(d), _) => d,
                (None, Some(step)) => 0.5 * step,
                (None, None) => 0.5 * quantization_step_or_err(&truth.y, DEFAULT_BINS)?,
            };
            ScalarProxSpec::linf(delta, params.gamma)?
        }
        Family::State => ScalarProxSpec::state(params.alpha, params.gamma, params.bound, 0.0)?,
    };
    Ok(ProblemSpec {
        family,
        mesh,
        fidelity,
        data,
        source: Source::Constant(1.0),
        truth,
        quantization_step,
    })
}

fn quantization_step_or_err(y: &NodalField, bins: usize) -> Result<f64> {
    let step = quantization_step(y, bins);
    if step > 0.0 {
        Ok(step)
    } else {
        Err(Error::ConstantData(step))
    }
}

/// Initial step lengths `σ₀ = 1/L̃`, `τ₀ = 0.99/L̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInit {
    pub lipschitz: f64,
    pub sigma0: f64,
    pub tau0: f64,
}

impl ProblemSpec {
    fn integrand_at(&self, j: usize) -> ScalarProxSpec {
        self.fidelity.with_yd(self.data[j])
    }

    /// `J_γ(u)` with mass-lumped integrals.
    pub fn functional_value(&self, u: &ElementField) -> Result<f64> {
        let y = self.state(u)?;
        Ok(self.objective(u, &y))
    }

    /// The two parts `(F_γ(K(u)), G(u))` of the functional.
    pub fn functional_terms(&self, u: &ElementField, y: &NodalField) -> (f64, f64) {
        let k = self.residual(y);
        let fidelity = self
            .mesh
            .lumped_weights()
            .iter()
            .zip(k.iter())
            .enumerate()
            .map(|(j, (w, &t))| w * self.integrand_at(j).fgamma(t))
            .sum();
        (fidelity, 0.5 * self.mesh.x_inner(u, u))
    }

    /// `L̃ = max{1, ‖S'(u⁰)u⁰‖ / ‖u⁰‖}`.
    pub fn lipschitz_estimate(&self, u0: &ElementField) -> Result<StepInit> {
        let norm = self.mesh.x_norm(u0);
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter(
                "Lipschitz estimate needs a nonzero initial coefficient".into(),
            ));
        }
        let y = self.state(u0)?;
        let w = fem1d::derivative_apply(&self.mesh, u0, &y, u0)?;
        let lipschitz = (self.mesh.y_norm(&w) / norm).max(1.0);
        Ok(StepInit {
            lipschitz,
            sigma0: 1.0 / lipschitz,
            tau0: 0.99 / lipschitz,
        })
    }

    /// Constraint violation at `u`; see [`Problem::feasibility`].
    pub fn feasibility_metric(&self, u: &ElementField) -> Result<f64> {
        let y = self.state(u)?;
        Ok(self.feasibility(&y))
    }

    /// Pointwise multiplier classification for the state problem.
    pub fn strict_complementarity(&self, p: &NodalField) -> Result<ComplementarityReport> {
        let Conjugate::State { alpha, c, .. } = self.fidelity.kind else {
            return Err(Error::InvalidParameter(
                "complementarity diagnostic only applies to the state problem".into(),
            ));
        };
        let mut multiplier = Vec::with_capacity(p.len());
        let mut degenerate = 0.0;
        for (j, (&pj, &w)) in p.iter().zip(self.mesh.lumped_weights()).enumerate() {
            let gap = alpha * pj - (c - self.data[j]);
            multiplier.push(if gap > 0.0 { 0.0 } else { alpha });
            if gap.abs() <= COMPLEMENTARITY_TOL {
                degenerate += w;
            }
        }
        Ok(ComplementarityReport {
            multiplier: NodalField::new(multiplier),
            degenerate_measure: degenerate,
        })
    }
}

/// Nodes with `|α p − (c − y^d)|` below this count as degenerate.
pub const COMPLEMENTARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplementarityReport {
    /// `0` where `α p > c − y^d` (bound active), `α` otherwise.
    pub multiplier: NodalField,
    /// Lumped measure of the nodes where the two cases nearly coincide.
    pub degenerate_measure: f64,
}

impl Problem for ProblemSpec {
    fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    fn state(&self, u: &ElementField) -> Result<NodalField> {
        fem1d::forward_solve(&self.mesh, u, &self.source)
    }

    fn residual(&self, y: &NodalField) -> NodalField {
        match self.family {
            Family::L1 | Family::Linf => y.add_scaled(-1.0, &self.data),
            Family::State => y.clone(),
        }
    }

    fn derivative_adjoint(
        &self,
        u: &ElementField,
        y: &NodalField,
        p: &NodalField,
    ) -> Result<ElementField> {
        fem1d::adjoint_apply(&self.mesh, u, y, p)
    }

    fn prox_g(&self, v: &ElementField, tau: f64) -> ElementField {
        prox::prox_g_field(v, tau)
    }

    fn prox_fstar(&self, v: &NodalField, sigma: f64) -> NodalField {
        let desired = (self.family == Family::State).then_some(&self.data);
        prox::prox_fstar_field(&self.fidelity, v, sigma, desired)
    }

    fn objective(&self, u: &ElementField, y: &NodalField) -> f64 {
        let (f, g) = self.functional_terms(u, y);
        f + g
    }

    fn feasibility(&self, y: &NodalField) -> f64 {
        match self.fidelity.kind {
            Conjugate::L1 { .. } => 0.0,
            Conjugate::Linf { delta } => y
                .iter()
                .zip(self.data.iter())
                .fold(0.0, |m, (s, d)| m.max((s - d).abs() - delta)),
            Conjugate::State { c, .. } => y.iter().fold(0.0, |m, s| m.max(s - c)),
        }
    }
}
