//! Proximal maps for the three model fidelity terms.
//!
//! Every fidelity `F` is an integral functional of a scalar integrand, so
//! `F*`, its Moreau–Yosida regularization `F*_γ = F* + γ/2 |·|²` and the
//! corresponding proximal maps all act pointwise. The closed forms live
//! here, next to a golden-section oracle that minimizes the defining
//! objective directly.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::fem1d::{ElementField, NodalField};

/// Scalar conjugate integrand `f*` of one of the model fidelities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conjugate {
    /// `f(t) = |t|/α`, so `f*` is the indicator of `[-1/α, 1/α]`.
    L1 { alpha: f64 },
    /// `f` the indicator of `[-δ, δ]`, so `f*(z) = δ|z|`.
    Linf { delta: f64 },
    /// `f(t) = |t - yd|²/(2α)` restricted to `t <= c`.
    State { alpha: f64, c: f64, yd: f64 },
}

/// A conjugate integrand together with its Moreau–Yosida parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarProxSpec {
    pub kind: Conjugate,
    pub gamma: f64,
}

impl ScalarProxSpec {
    pub fn new(kind: Conjugate, gamma: f64) -> Result<Self> {
        let spec = Self { kind, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn l1(alpha: f64, gamma: f64) -> Result<Self> {
        Self::new(Conjugate::L1 { alpha }, gamma)
    }

    pub fn linf(delta: f64, gamma: f64) -> Result<Self> {
        Self::new(Conjugate::Linf { delta }, gamma)
    }

    pub fn state(alpha: f64, gamma: f64, c: f64, yd: f64) -> Result<Self> {
        Self::new(Conjugate::State { alpha, c, yd }, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be finite and >= 0, got {}",
                self.gamma
            )));
        }
        match self.kind {
            Conjugate::L1 { alpha } | Conjugate::State { alpha, .. } if !(alpha > 0.0) => Err(
                Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")),
            ),
            Conjugate::Linf { delta } if !(delta > 0.0) => Err(Error::InvalidParameter(format!(
                "delta must be > 0, got {delta}"
            ))),
            Conjugate::State { c, yd, .. } if !(c.is_finite() && yd.is_finite()) => Err(
                Error::InvalidParameter("state bound and desired state must be finite".into()),
            ),
            _ => Ok(()),
        }
    }

    /// Same integrand at a different desired-state value (state family only).
    pub fn with_yd(mut self, value: f64) -> Self {
        if let Conjugate::State { ref mut yd, .. } = self.kind {
            *yd = value;
        }
        self
    }

    /// `prox_{σ f*_γ}(v)`.
    pub fn prox_fstar(&self, v: f64, sigma: f64) -> f64 {
        match self.kind {
            Conjugate::L1 { alpha } => prox_fstar_l1(v, sigma, alpha, self.gamma),
            Conjugate::Linf { delta } => prox_fstar_linf(v, sigma, delta, self.gamma),
            Conjugate::State { alpha, c, yd } => {
                prox_fstar_state(v, sigma, alpha, self.gamma, c, yd)
            }
        }
    }

    /// Moreau–Yosida regularized integrand `f_γ(t)`; see [`fgamma_value`].
    pub fn fgamma(&self, t: f64) -> f64 {
        fgamma_value(self, t)
    }

    /// `f*_γ(z)`, `+∞` outside the domain.
    pub fn conjugate_value(&self, z: f64) -> f64 {
        let quad = 0.5 * self.gamma * z * z;
        match self.kind {
            Conjugate::L1 { alpha } => {
                if z.abs() <= 1.0 / alpha {
                    quad
                } else {
                    f64::INFINITY
                }
            }
            Conjugate::Linf { delta } => delta * z.abs() + quad,
            Conjugate::State { alpha, c, yd } => {
                if z > (c - yd) / alpha {
                    c * z - (c - yd) * (c - yd) / (2.0 * alpha) + quad
                } else {
                    0.5 * alpha * z * z + z * yd + quad
                }
            }
        }
    }

    /// Derivative of `f*_γ` at `z`, where it exists.
    pub fn conjugate_derivative(&self, z: f64) -> Option<f64> {
        let g = self.gamma * z;
        match self.kind {
            Conjugate::L1 { alpha } => (z.abs() < 1.0 / alpha).then_some(g),
            Conjugate::Linf { delta } => (z != 0.0).then(|| delta * z.signum() + g),
            Conjugate::State { alpha, c, yd } => {
                // C¹ across the kink: both branches give c there.
                if z > (c - yd) / alpha {
                    Some(c + g)
                } else {
                    Some(alpha * z + yd + g)
                }
            }
        }
    }
}

/// `prox_{τG}` for `G = ½‖·‖²`.
pub fn prox_g(v: f64, tau: f64) -> f64 {
    v / (1.0 + tau)
}

pub fn prox_g_field(v: &ElementField, tau: f64) -> ElementField {
    v.map(|x| prox_g(x, tau))
}

/// Projection of `v/(1+σγ)` onto `[-1/α, 1/α]`.
pub fn prox_fstar_l1(v: f64, sigma: f64, alpha: f64, gamma: f64) -> f64 {
    let bound = 1.0 / alpha;
    (v / (1.0 + sigma * gamma)).clamp(-bound, bound)
}

/// Soft shrinkage by `δσ` followed by scaling with `1/(1+σγ)`.
pub fn prox_fstar_linf(v: f64, sigma: f64, delta: f64, gamma: f64) -> f64 {
    let shrunk = (v.abs() - delta * sigma).max(0.0);
    (shrunk / (1.0 + sigma * gamma)).copysign(v)
}

pub fn prox_fstar_state(v: f64, sigma: f64, alpha: f64, gamma: f64, c: f64, yd: f64) -> f64 {
    if v > state_prox_threshold(sigma, alpha, gamma, c, yd) {
        (v - sigma * c) / (1.0 + sigma * gamma)
    } else {
        (v - sigma * yd) / (1.0 + sigma * (alpha + gamma))
    }
}

/// Input value at which [`prox_fstar_state`] switches branches.
pub fn state_prox_threshold(sigma: f64, alpha: f64, gamma: f64, c: f64, yd: f64) -> f64 {
    (1.0 + sigma * gamma) / alpha * (c - yd) + sigma * c
}

/// Pointwise `prox_{σ F*_γ}` on a nodal dual field. For the state family
/// the desired state is read per node from `desired`.
pub fn prox_fstar_field(
    spec: &ScalarProxSpec,
    v: &NodalField,
    sigma: f64,
    desired: Option<&NodalField>,
) -> NodalField {
    match (spec.kind, desired) {
        (Conjugate::State { .. }, Some(yd)) => NodalField::new(
            v.iter()
                .zip(yd.iter())
                .map(|(&x, &d)| spec.with_yd(d).prox_fstar(x, sigma))
                .collect(),
        ),
        _ => v.map(|x| spec.prox_fstar(x, sigma)),
    }
}

/// Moreau–Yosida envelope `f_γ(t) = min_s f(s) + |s - t|²/(2γ)`.
///
/// With `γ = 0` this is `f` itself; the indicator parts evaluate to `+∞`
/// outside their sets.
pub fn fgamma_value(spec: &ScalarProxSpec, t: f64) -> f64 {
    let gamma = spec.gamma;
    match spec.kind {
        Conjugate::L1 { alpha } => {
            if gamma == 0.0 {
                t.abs() / alpha
            } else if t.abs() <= gamma / alpha {
                t * t / (2.0 * gamma)
            } else {
                t.abs() / alpha - gamma / (2.0 * alpha * alpha)
            }
        }
        Conjugate::Linf { delta } => {
            let excess = (t.abs() - delta).max(0.0);
            if gamma == 0.0 {
                if excess > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                excess * excess / (2.0 * gamma)
            }
        }
        Conjugate::State { alpha, c, yd } => {
            if gamma == 0.0 {
                if t <= c {
                    (t - yd) * (t - yd) / (2.0 * alpha)
                } else {
                    f64::INFINITY
                }
            } else if t > state_fgamma_breakpoint(alpha, gamma, c, yd) {
                (c - yd) * (c - yd) / (2.0 * alpha) + (t - c) * (t - c) / (2.0 * gamma)
            } else {
                (t - yd) * (t - yd) / (2.0 * (alpha + gamma))
            }
        }
    }
}

/// Argument where the regularized state integrand switches from the
/// unconstrained quadratic to the active-bound branch. Above it the inner
/// minimizer `(γ yd + α t)/(α + γ)` would exceed `c`.
pub fn state_fgamma_breakpoint(alpha: f64, gamma: f64, c: f64, yd: f64) -> f64 {
    (1.0 + gamma / alpha) * c - gamma / alpha * yd
}

/// `argmin_w ½(w - v)² + σ f*_γ(w)` by golden-section search.
///
/// Objective values are never compared directly: the difference between
/// two trial points is evaluated in factored form so that the search stays
/// accurate where the objective is flat.
pub fn prox_oracle(spec: &ScalarProxSpec, v: f64, sigma: f64) -> f64 {
    let mut bound = 1.0 + v.abs();
    match spec.kind {
        Conjugate::L1 { alpha } => bound += 1.0 / alpha,
        Conjugate::Linf { delta } => bound += delta,
        Conjugate::State { alpha, c, yd } => bound += 1.0 / alpha + c.abs() + yd.abs(),
    }
    let radius = v.abs() + sigma * 10.0 * bound;
    let (mut lo, mut hi) = (v - radius, v + radius);

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    for _ in 0..1000 {
        let width = hi - lo;
        if width <= 1e-12_f64.max(4.0 * f64::EPSILON * lo.abs().max(hi.abs())) {
            break;
        }
        let a = hi - INV_PHI * width;
        let b = lo + INV_PHI * width;
        match compare_objective(spec, v, sigma, a, b) {
            Ordering::Less => hi = b,
            _ => lo = a,
        }
    }
    0.5 * (lo + hi)
}

/// Sign of `φ(a) - φ(b)` for `φ(w) = ½(w - v)² + σ f*_γ(w)`.
fn compare_objective(spec: &ScalarProxSpec, v: f64, sigma: f64, a: f64, b: f64) -> Ordering {
    if let Conjugate::L1 { alpha } = spec.kind {
        // infeasible points are ordered by their distance to the box
        let bound = 1.0 / alpha;
        let (ea, eb) = ((a.abs() - bound).max(0.0), (b.abs() - bound).max(0.0));
        if ea > 0.0 || eb > 0.0 {
            return ea.partial_cmp(&eb).unwrap_or(Ordering::Equal);
        }
    }
    let fidelity = 0.5 * (a - b) * (a + b - 2.0 * v);
    let diff = fidelity + sigma * conjugate_difference(spec, a, b);
    diff.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
}

/// `f*_γ(a) - f*_γ(b)` in factored form, for feasible `a`, `b`.
fn conjugate_difference(spec: &ScalarProxSpec, a: f64, b: f64) -> f64 {
    let quad = 0.5 * spec.gamma * (a - b) * (a + b);
    let base = match spec.kind {
        Conjugate::L1 { .. } => 0.0,
        Conjugate::Linf { delta } => delta * (a.abs() - b.abs()),
        Conjugate::State { alpha, c, yd } => {
            let kink = (c - yd) / alpha;
            let piece = |x: f64, y: f64, upper: bool| {
                if upper {
                    c * (x - y)
                } else {
                    (x - y) * (0.5 * alpha * (x + y) + yd)
                }
            };
            let (ua, ub) = (a > kink, b > kink);
            if ua == ub {
                piece(a, b, ua)
            } else {
                piece(a, kink, ua) + piece(kink, b, ub)
            }
        }
    };
    base + quad
}
