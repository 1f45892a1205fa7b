//! Accelerated nonlinear primal-dual extragradient method for nonsmooth
//! PDE-constrained optimization.
//!
//! The crate solves problems of the form `min_u F(K(u)) + G(u)` where `K`
//! involves the solution operator of the elliptic equation
//! `-y'' + u y = f` on (-1, 1), and `F` is nonsmooth. Three model problems
//! are provided: L¹ data fitting, L∞ data fitting and state constraints,
//! each with Moreau–Yosida regularization of the fidelity.
//!
//! * [`fem1d`]: P1 finite elements, forward solve, derivative and adjoint.
//! * [`prox`]: closed-form proximal maps and a golden-section oracle.
//! * [`engine`]: the iteration with optional step-length acceleration.
//! * [`problems`]: data generation, functionals and step initialization.
//! * [`experiment`]: configuration, presets and CSV convergence logs.
//!
//! ```
//! use pdextra::experiment::{run_single, ExperimentConfig};
//! use pdextra::Family;
//!
//! let cfg = ExperimentConfig {
//!     n: 100,
//!     iters: 200,
//!     ..ExperimentConfig::defaults(Family::L1)
//! };
//! let result = run_single(&cfg, 0).unwrap();
//! let last = result.output.records.last().unwrap();
//! assert!(last.j_gamma < result.output.j_initial);
//! ```

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod experiment;
pub mod fem1d;
pub mod problems;
pub mod prox;

pub use engine::{run, AccelMode, IterateRecord, IterateState, Problem, RunOutput, StepSchedule};
pub use error::{Error, Result};
pub use fem1d::{ElementField, Mesh1D, NodalField, Source, Space};
pub use problems::{make_problem, Family, NoiseConfig, NoiseKind, ProblemParams, ProblemSpec};
pub use prox::{Conjugate, ScalarProxSpec};
