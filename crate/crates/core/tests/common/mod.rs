#![allow(dead_code)]

use pdextra::ScalarProxSpec;
use rand::Rng;

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// `(spec, v, σ)` with α ∈ [1e-3, 1e2], γ ∈ [1e-6, 1e1], σ ∈ [1e-3, 1e3],
/// δ ∈ [1e-3, 1e1], c, yd ∈ [-2, 2] and |v| ∈ [1e-2, 1e3], all
/// magnitudes log-uniform.
pub fn random_case<R: Rng>(
    rng: &mut R,
    family: usize,
    gamma_zero: bool,
) -> (ScalarProxSpec, f64, f64) {
    let gamma = if gamma_zero {
        0.0
    } else {
        log_uniform(rng, 1e-6, 1e1)
    };
    let sigma = log_uniform(rng, 1e-3, 1e3);
    let magnitude = log_uniform(rng, 1e-2, 1e3);
    let v = if rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    };
    let spec = match family {
        0 => ScalarProxSpec::l1(log_uniform(rng, 1e-3, 1e2), gamma),
        1 => ScalarProxSpec::linf(log_uniform(rng, 1e-3, 1e1), gamma),
        _ => ScalarProxSpec::state(
            log_uniform(rng, 1e-3, 1e2),
            gamma,
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ),
    }
    .unwrap();
    (spec, v, sigma)
}

pub const FAMILIES: [&str; 3] = ["l1", "linf", "state"];
