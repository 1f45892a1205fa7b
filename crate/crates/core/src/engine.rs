//! Accelerated nonlinear primal-dual extragradient iteration.
//!
//! For `min_u F(K(u)) + G(u)` one iteration reads
//!
//! ```text
//! u⁺  = prox_{τG}(u − τ ∇K(u)* p)
//! ω, τ⁺, σ⁺ from the step schedule
//! ū   = u⁺ + ω (u⁺ − u)
//! p⁺  = prox_{σ⁺ F*_γ}(p + σ⁺ K(ū))
//! ```
//!
//! With `μ = 0` the schedule is constant and `ω = 1`, which is the plain
//! extragradient method.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::fem1d::{ElementField, Mesh1D, NodalField};

/// Which strongly convex term drives the step-length acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccelMode {
    /// Constant steps, `ω = 1`.
    Off,
    /// `G` strongly convex: `ω = 1/√(1+2μτ)`, `τ ← ωτ`, `σ ← σ/ω`.
    G,
    /// `F*` strongly convex: `ω = 1/√(1+2μσ)`, `σ ← ωσ`, `τ ← τ/ω`.
    FStar,
}

impl AccelMode {
    pub fn name(self) -> &'static str {
        match self {
            AccelMode::Off => "none",
            AccelMode::G => "accel-G",
            AccelMode::FStar => "accel-Fstar",
        }
    }
}

/// Step lengths and extrapolation weight of the current iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub tau: f64,
    pub sigma: f64,
    pub omega: f64,
    pub mu: f64,
    pub mode: AccelMode,
    /// Number of accelerated updates; afterwards the steps are frozen.
    pub accel_iters: usize,
    /// Number of updates performed so far.
    pub updates: usize,
}

impl StepSchedule {
    pub fn new(tau: f64, sigma: f64, mu: f64, mode: AccelMode, accel_iters: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite() && sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step lengths must be positive and finite (tau={tau}, sigma={sigma})"
            )));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mu must be >= 0, got {mu}"
            )));
        }
        Ok(Self {
            tau,
            sigma,
            omega: 1.0,
            mu,
            mode,
            accel_iters,
            updates: 0,
        })
    }

    /// True if the next update still accelerates.
    pub fn accelerating(&self) -> bool {
        self.mode != AccelMode::Off && self.mu > 0.0 && self.updates < self.accel_iters
    }

    /// Advances the schedule by one iteration.
    pub fn update(&self) -> Self {
        let mut next = *self;
        next.updates += 1;
        if !self.accelerating() {
            next.omega = 1.0;
            return next;
        }
        match self.mode {
            AccelMode::G => {
                let omega = 1.0 / (1.0 + 2.0 * self.mu * self.tau).sqrt();
                next.omega = omega;
                next.tau = omega * self.tau;
                next.sigma = self.sigma / omega;
            }
            AccelMode::FStar => {
                let omega = 1.0 / (1.0 + 2.0 * self.mu * self.sigma).sqrt();
                next.omega = omega;
                next.sigma = omega * self.sigma;
                next.tau = self.tau / omega;
            }
            AccelMode::Off => unreachable!(),
        }
        next
    }

    /// Checks the invariants relating this schedule to its successor.
    ///
    /// `product0` is `τ₀σ₀` of the run.
    pub fn check_transition(&self, next: &Self, product0: f64) -> std::result::Result<(), String> {
        let drift = (next.tau * next.sigma - product0).abs() / product0;
        if drift > 1e-12 {
            return Err(format!("tau*sigma drifted by {drift:e} (relative)"));
        }
        if !(next.omega > 0.0 && next.omega <= 1.0) {
            return Err(format!("omega = {} outside (0, 1]", next.omega));
        }
        let accelerated = self.accelerating();
        if !accelerated && next.omega != 1.0 {
            return Err(format!("omega = {} without acceleration", next.omega));
        }
        let (shrinking, growing) = match (accelerated, self.mode) {
            (false, _) | (_, AccelMode::Off) => {
                if next.tau != self.tau || next.sigma != self.sigma {
                    return Err("step lengths changed without acceleration".into());
                }
                return Ok(());
            }
            (true, AccelMode::G) => ((self.tau, next.tau), (self.sigma, next.sigma)),
            (true, AccelMode::FStar) => ((self.sigma, next.sigma), (self.tau, next.tau)),
        };
        if shrinking.1 > shrinking.0 || growing.1 < growing.0 {
            return Err(format!(
                "{} monotonicity violated: {:?} -> {:?}",
                self.mode.name(),
                (self.tau, self.sigma),
                (next.tau, next.sigma)
            ));
        }
        // μ + 1/s_i − 1/s_{i+1} ≥ 0 for the shrinking step s
        let (s0, s1) = shrinking;
        let slack = self.mu + 1.0 / s0 - 1.0 / s1;
        if slack < -1e-12 * (1.0 / s1) {
            return Err(format!("step-length inequality violated: slack {slack:e}"));
        }
        Ok(())
    }
}

/// Problem data the iteration needs, for `K` factoring through a
/// state map `y = S(u)`.
pub trait Problem: Sync {
    fn mesh(&self) -> &Mesh1D;

    /// `S(u)`.
    fn state(&self, u: &ElementField) -> Result<NodalField>;

    /// `K(u)` from the state `y = S(u)`.
    fn residual(&self, y: &NodalField) -> NodalField;

    /// `∇K(u)* p`, with `y = S(u)`.
    fn derivative_adjoint(
        &self,
        u: &ElementField,
        y: &NodalField,
        p: &NodalField,
    ) -> Result<ElementField>;

    fn prox_g(&self, v: &ElementField, tau: f64) -> ElementField;

    /// `prox_{σ F*_γ}`, applied nodally.
    fn prox_fstar(&self, v: &NodalField, sigma: f64) -> NodalField;

    /// `J_γ(u) = F_γ(K(u)) + G(u)`, with `y = S(u)`.
    fn objective(&self, u: &ElementField, y: &NodalField) -> f64;

    /// Constraint violation of the state, zero when there is no constraint.
    fn feasibility(&self, y: &NodalField) -> f64;
}

/// Current primal-dual pair plus the state at the primal point.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub u: ElementField,
    pub p: NodalField,
    pub u_prev: ElementField,
    /// `S(u)`.
    pub y: NodalField,
    pub i: usize,
}

impl IterateState {
    pub fn new<P: Problem + ?Sized>(problem: &P, u: ElementField, p: NodalField) -> Result<Self> {
        let y = problem.state(&u)?;
        Ok(Self {
            u_prev: u.clone(),
            u,
            p,
            y,
            i: 0,
        })
    }
}

/// One line of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub i: usize,
    pub j_gamma: f64,
    /// Step lengths after this iteration's update.
    pub tau: f64,
    pub sigma: f64,
    /// Extrapolation weight applied in this iteration.
    pub omega: f64,
    pub primal_change: f64,
    pub feasibility: f64,
    pub wall_time_ms: f64,
}

/// One extragradient step.
pub fn pdegm_step<P: Problem + ?Sized>(
    state: &IterateState,
    schedule: &StepSchedule,
    problem: &P,
) -> Result<(IterateState, StepSchedule, IterateRecord)> {
    let start = Instant::now();
    let iteration = state.i + 1;
    let at = |e: Error| Error::Step {
        iteration,
        source: Box::new(e),
    };
    let mesh = problem.mesh();

    let z = problem
        .derivative_adjoint(&state.u, &state.y, &state.p)
        .map_err(at)?;
    let tau = schedule.tau;
    let u_next = problem.prox_g(&state.u.add_scaled(-tau, &z), tau);
    if !u_next.is_finite() {
        return Err(Error::NonFinite {
            iteration,
            what: "primal iterate",
        });
    }

    let next_schedule = schedule.update();
    let omega = next_schedule.omega;
    let step = u_next.add_scaled(-1.0, &state.u);
    let u_bar = u_next.add_scaled(omega, &step);

    let y_bar = problem.state(&u_bar).map_err(at)?;
    let sigma = next_schedule.sigma;
    let r = state.p.add_scaled(sigma, &problem.residual(&y_bar));
    let p_next = problem.prox_fstar(&r, sigma);
    if !p_next.is_finite() {
        return Err(Error::NonFinite {
            iteration,
            what: "dual iterate",
        });
    }

    let y_next = problem.state(&u_next).map_err(at)?;
    let j_gamma = problem.objective(&u_next, &y_next);
    let record = IterateRecord {
        i: iteration,
        j_gamma,
        tau: next_schedule.tau,
        sigma: next_schedule.sigma,
        omega,
        primal_change: mesh.x_norm(&step),
        feasibility: problem.feasibility(&y_next),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let next_state = IterateState {
        u_prev: state.u.clone(),
        u: u_next,
        p: p_next,
        y: y_next,
        i: iteration,
    };
    Ok((next_state, next_schedule, record))
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// `J_γ(u⁰)`.
    pub j_initial: f64,
    pub records: Vec<IterateRecord>,
    pub state: IterateState,
    pub schedule: StepSchedule,
}

/// Runs `iterations` steps from `(u0, p0)`.
pub fn run<P: Problem + ?Sized>(
    problem: &P,
    schedule: StepSchedule,
    u0: ElementField,
    p0: NodalField,
    iterations: usize,
) -> Result<RunOutput> {
    run_with(problem, schedule, u0, p0, iterations, |_, _| {})
}

/// [`run`] with a callback invoked after every iteration.
///
/// Every schedule transition is checked against the acceleration
/// invariants, and the run aborts once `J_γ` exceeds `10⁶ J_γ(u⁰)` or stops
/// being finite.
pub fn run_with<P, F>(
    problem: &P,
    schedule: StepSchedule,
    u0: ElementField,
    p0: NodalField,
    iterations: usize,
    mut observe: F,
) -> Result<RunOutput>
where
    P: Problem + ?Sized,
    F: FnMut(&IterateState, &IterateRecord),
{
    if iterations == 0 {
        return Err(Error::InvalidParameter(
            "iteration count must be >= 1".into(),
        ));
    }
    let mut state = IterateState::new(problem, u0, p0)?;
    let j_initial = problem.objective(&state.u, &state.y);
    if !j_initial.is_finite() {
        return Err(Error::NonFinite {
            iteration: 0,
            what: "initial functional value",
        });
    }
    let bound = 1e6 * j_initial.abs();
    let product0 = schedule.tau * schedule.sigma;
    let mut schedule = schedule;
    let mut records = Vec::with_capacity(iterations);

    for _ in 0..iterations {
        let (next, next_schedule, record) = pdegm_step(&state, &schedule, problem)?;
        schedule
            .check_transition(&next_schedule, product0)
            .map_err(|what| Error::Invariant {
                iteration: record.i,
                what,
            })?;
        if !record.j_gamma.is_finite() {
            return Err(Error::NonFinite {
                iteration: record.i,
                what: "functional value",
            });
        }
        if record.j_gamma > bound {
            return Err(Error::Diverged {
                iteration: record.i,
                value: record.j_gamma,
                bound,
            });
        }
        observe(&next, &record);
        records.push(record);
        state = next;
        schedule = next_schedule;
    }
    Ok(RunOutput {
        j_initial,
        records,
        state,
        schedule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mu_is_identity() {
        for mode in [AccelMode::Off, AccelMode::G, AccelMode::FStar] {
            let s = StepSchedule::new(0.3, 2.0, 0.0, mode, 10).unwrap();
            let t = s.update();
            assert_eq!((t.tau, t.sigma, t.omega), (0.3, 2.0, 1.0));
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn accel_g_formula() {
        let s = StepSchedule::new(1.0, 1.0, 0.5, AccelMode::G, 10).unwrap();
        let t = s.update();
        let w = 1.0 / 2f64.sqrt();
        assert!((t.omega - w).abs() < 1e-15);
        assert!((t.tau - 0.707_106_8).abs() < 1e-7);
        assert!((t.sigma - 1.414_213_6).abs() < 1e-7);
        assert!((t.tau * t.sigma - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn accel_fstar_formula() {
        let s = StepSchedule::new(0.5, 2.0, 0.25, AccelMode::FStar, 10).unwrap();
        let t = s.update();
        let w = 1.0 / 2f64.sqrt();
        assert!((t.omega - w).abs() < 1e-15);
        assert!((t.sigma - 2.0 * w).abs() < 1e-15);
        assert!((t.tau - 0.5 / w).abs() < 1e-15);
        s.check_transition(&t, 1.0).unwrap();
    }

    #[test]
    fn acceleration_stops_after_budget() {
        let mut s = StepSchedule::new(1.0, 1.0, 0.9, AccelMode::G, 3).unwrap();
        for k in 0..6 {
            let t = s.update();
            s.check_transition(&t, 1.0).unwrap();
            if k >= 3 {
                assert_eq!(t.omega, 1.0);
                assert_eq!((t.tau, t.sigma), (s.tau, s.sigma));
            } else {
                assert!(t.omega < 1.0);
            }
            s = t;
        }
    }

    #[test]
    fn transition_check_catches_bad_updates() {
        let s = StepSchedule::new(1.0, 1.0, 0.5, AccelMode::G, 10).unwrap();
        let mut t = s.update();
        t.sigma *= 1.01;
        assert!(s.check_transition(&t, 1.0).is_err());
        let mut t = s.update();
        t.omega = 1.5;
        assert!(s.check_transition(&t, 1.0).is_err());
        // shrinking τ faster than μ allows breaks the step-length inequality
        let mut t = s.update();
        t.tau = 0.1;
        t.sigma = 10.0;
        assert!(s.check_transition(&t, 1.0).is_err());
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(StepSchedule::new(0.0, 1.0, 0.0, AccelMode::Off, 1).is_err());
        assert!(StepSchedule::new(1.0, f64::INFINITY, 0.0, AccelMode::Off, 1).is_err());
        assert!(StepSchedule::new(1.0, 1.0, -0.1, AccelMode::G, 1).is_err());
    }
}
