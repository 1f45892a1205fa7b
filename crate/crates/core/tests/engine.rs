use pdextra::engine::pdegm_step;
use pdextra::experiment::{run_single, ExperimentConfig, FULL_ACCELERATION};
use pdextra::problems::NoiseKind;
use pdextra::{
    make_problem, run, AccelMode, ElementField, Error, Family, IterateState, Mesh1D, NodalField,
    NoiseConfig, Problem, ProblemParams, ProblemSpec, StepSchedule,
};
use proptest::prelude::*;

fn clean_problem(family: Family, n: usize, params: ProblemParams) -> ProblemSpec {
    make_problem(
        family,
        Mesh1D::new(n).unwrap(),
        &params,
        &NoiseConfig::none(),
    )
    .unwrap()
}

fn start(problem: &ProblemSpec) -> (ElementField, NodalField) {
    (
        ElementField::constant(&problem.mesh, 1.0),
        NodalField::constant(&problem.mesh, 0.0),
    )
}

#[test]
fn hand_computed_first_step() {
    let params = ProblemParams {
        alpha: 1e-3,
        gamma: 1.0,
        ..ProblemParams::default()
    };
    let problem = clean_problem(Family::L1, 2, params);
    let (u0, p0) = start(&problem);
    let schedule = StepSchedule::new(0.99, 1.0, 0.0, AccelMode::G, 10).unwrap();
    let state = IterateState::new(&problem, u0, p0).unwrap();
    let (next, sched, record) = pdegm_step(&state, &schedule, &problem).unwrap();

    // p⁰ = 0, so u¹ = u⁰/(1+τ); with ω = 1 the extrapolated point is the
    // constant 2u¹ − 1, whose state is its reciprocal
    let u1 = 1.0 / 1.99;
    let ubar = 2.0 * u1 - 1.0;
    for &v in next.u.iter() {
        assert!((v - u1).abs() <= 1e-15);
    }
    for (j, &p) in next.p.iter().enumerate() {
        let r = 1.0 / ubar - problem.data[j];
        assert!(r.abs() < 1e3);
        assert!(
            (p - r / 2.0).abs() <= 1e-10 * r.abs(),
            "node {j}: {p} vs {}",
            r / 2.0
        );
    }
    assert_eq!((sched.tau, sched.sigma, record.omega), (0.99, 1.0, 1.0));
    assert!((record.primal_change - 2f64.sqrt() * (1.0 - u1)).abs() <= 1e-15);
    for &y in next.y.iter() {
        assert!((y - 1.99).abs() <= 1e-12);
    }
}

#[test]
fn acceleration_leaves_first_primal_update_alone() {
    let problem = clean_problem(Family::L1, 50, ProblemParams::default());
    let (u0, p0) = start(&problem);
    let state = IterateState::new(&problem, u0, p0).unwrap();
    let plain = StepSchedule::new(0.99, 1.0, 0.0, AccelMode::G, 10).unwrap();
    let accel = StepSchedule::new(0.99, 1.0, FULL_ACCELERATION, AccelMode::G, 10).unwrap();
    let (a, _, ra) = pdegm_step(&state, &plain, &problem).unwrap();
    let (b, _, rb) = pdegm_step(&state, &accel, &problem).unwrap();
    assert_eq!(a.u, b.u);
    assert_ne!(a.p, b.p);
    assert!(rb.omega < ra.omega);
}

#[test]
fn single_iteration_run_is_one_step() {
    let problem = clean_problem(Family::State, 40, ProblemParams::default());
    let (u0, p0) = start(&problem);
    let schedule = StepSchedule::new(0.99, 1.0, 0.5, AccelMode::G, 5).unwrap();
    let out = run(&problem, schedule, u0.clone(), p0.clone(), 1).unwrap();
    let state = IterateState::new(&problem, u0, p0).unwrap();
    let (next, sched, record) = pdegm_step(&state, &schedule, &problem).unwrap();
    assert_eq!(out.state, next);
    assert_eq!(out.schedule, sched);
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].j_gamma, record.j_gamma);
}

#[test]
fn vanishing_mu_matches_plain_iteration() {
    let problem = clean_problem(Family::L1, 100, ProblemParams::default());
    let (u0, p0) = start(&problem);
    let plain = StepSchedule::new(0.99, 1.0, 0.0, AccelMode::Off, 100).unwrap();
    let tiny = StepSchedule::new(0.99, 1.0, 1e-14, AccelMode::G, 100).unwrap();
    let a = run(&problem, plain, u0.clone(), p0.clone(), 100).unwrap();
    let b = run(&problem, tiny, u0, p0, 100).unwrap();
    let du = a.state.u.add_scaled(-1.0, &b.state.u).max_abs();
    let dp = a.state.p.add_scaled(-1.0, &b.state.p).max_abs();
    assert!(du <= 1e-8 && dp <= 1e-8, "du={du:e} dp={dp:e}");
}

#[test]
fn converged_pair_is_a_fixed_point() {
    let params = ProblemParams {
        alpha: 1.0,
        gamma: 1.0,
        ..ProblemParams::default()
    };
    let mut problem = clean_problem(Family::L1, 20, params);
    problem.data = problem.data.map(|v| v + 0.05);
    let (u0, p0) = start(&problem);
    let schedule = StepSchedule::new(0.5, 0.5, 0.0, AccelMode::Off, 0).unwrap();
    let out = run(&problem, schedule, u0, p0, 3000).unwrap();
    let (next, _, record) = pdegm_step(&out.state, &out.schedule, &problem).unwrap();
    assert!(next.u.add_scaled(-1.0, &out.state.u).max_abs() <= 1e-10);
    assert!(next.p.add_scaled(-1.0, &out.state.p).max_abs() <= 1e-10);
    assert!(record.primal_change <= 1e-10);
}

#[test]
fn l1_experiment_regression() {
    let cfg = ExperimentConfig::defaults(Family::L1);
    let result = run_single(&cfg, 0).unwrap();
    let records = &result.output.records;
    assert_eq!(records.len(), 1000);
    let last = records.last().unwrap();
    assert!(last.j_gamma <= result.output.j_initial);
    assert!(last.primal_change <= 1e-2 * records[0].primal_change);
    assert!(
        (last.j_gamma - 7.31814386157005).abs() <= 1e-6 * 7.32,
        "J = {}",
        last.j_gamma
    );
}

#[test]
fn dual_acceleration_mode_runs() {
    let params = ProblemParams {
        gamma: 1e-2,
        ..ProblemParams::default()
    };
    let problem = clean_problem(Family::Linf, 100, params);
    let (u0, p0) = start(&problem);
    let schedule = StepSchedule::new(0.99, 1.0, 1e-3, AccelMode::FStar, 50).unwrap();
    let out = run(&problem, schedule, u0, p0, 200).unwrap();
    let first = out.records[0];
    let last = out.records.last().unwrap();
    assert!(last.sigma < first.sigma && last.tau > first.tau);
    assert!(last.j_gamma < out.j_initial);
}

#[test]
fn oversized_steps_are_reported() {
    let problem = make_problem(
        Family::L1,
        Mesh1D::new(100).unwrap(),
        &ProblemParams::default(),
        &NoiseConfig {
            kind: NoiseKind::Impulsive {
                rate: 0.3,
                level: 0.1,
            },
            seed: 1,
            stream: 0,
        },
    )
    .unwrap();
    let (u0, p0) = start(&problem);
    let schedule = StepSchedule::new(50.0, 50.0, 0.0, AccelMode::Off, 0).unwrap();
    let err = run(&problem, schedule, u0, p0, 1000).unwrap_err();
    assert!(
        matches!(
            err,
            Error::Diverged { .. } | Error::Step { .. } | Error::NonFinite { .. }
        ),
        "{err}"
    );
}

#[test]
fn zero_iterations_rejected() {
    let problem = clean_problem(Family::L1, 10, ProblemParams::default());
    let (u0, p0) = start(&problem);
    let schedule = StepSchedule::new(0.99, 1.0, 0.0, AccelMode::G, 0).unwrap();
    assert!(run(&problem, schedule, u0, p0, 0).is_err());
    assert_eq!(problem.mesh().n(), 10);
}

proptest! {
    #[test]
    fn schedule_invariants(
        tau in 1e-3f64..1e2,
        sigma in 1e-3f64..1e2,
        mu in 0.0f64..10.0,
        dual in any::<bool>(),
        accel in 0usize..300,
    ) {
        let mode = if dual { AccelMode::FStar } else { AccelMode::G };
        let mut s = StepSchedule::new(tau, sigma, mu, mode, accel).unwrap();
        let product0 = tau * sigma;
        for i in 0..400 {
            let next = s.update();
            prop_assert!(s.check_transition(&next, product0).is_ok(), "step {}: {:?}", i, s.check_transition(&next, product0));
            if i >= accel || mu == 0.0 {
                prop_assert_eq!(next.omega, 1.0);
            }
            s = next;
        }
    }
}
