//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `cargo test --test acceptance -- --nocapture`). Every
//! tolerance is pinned here, in code.

use semidp::cost::{Finite, Infinite};
use semidp::instances::{
    build_lq_scalar, build_random_problem, build_spath_counterexample,
    build_stopping_discretization, log_spaced_radii, spath_exit_policy, spath_stay_policy,
    stopping_bellman_residual, stopping_grid_radii, stopping_value, StoppingParams,
    StoppingSolutionKind,
};
use semidp::matrix::Mat;
use semidp::model::{ForcingFunction, ValueFunction};
use semidp::oracle::{oracle_j_plus, oracle_j_star};
use semidp::riccati::{
    linear_policy_cost, p_hat_via_delta_limit, riccati_map, solve_riccati_fixed_point, LinearPolicyCost,
    LqProblem, RiccatiError, Stability,
};
use semidp::solvers::{
    compute_j_plus, compute_j_star_vi, j_hat_via_delta_limit, optimistic_policy_iteration,
    perturbed_policy_iteration, policy_iteration, value_iteration, DeltaSchedule, MSchedule, PiTie,
};
use semidp::suite::{run_suite, SuiteConfig};

#[test]
fn acceptance_1_scalar_riccati_multiplicity() {
    let problem = build_lq_scalar(2.0, 0.0, 1.0, 1.0).unwrap();

    let high = solve_riccati_fixed_point(&problem, &Mat::scalar(1.0), 0.0, 1e-12, 200).unwrap();
    assert!((high.p[(0, 0)] - 3.0).abs() <= 1e-9, "P from P0=1: {}", high.p[(0, 0)]);
    assert!((high.gain[(0, 0)] + 1.5).abs() <= 1e-9, "gain: {}", high.gain[(0, 0)]);
    assert!((high.closed_loop_spectral_radius - 0.5).abs() <= 1e-9);
    assert_eq!(high.classification, Stability::Stabilizing);

    let low = solve_riccati_fixed_point(&problem, &Mat::scalar(0.0), 0.0, 1e-12, 200).unwrap();
    assert_eq!(low.p[(0, 0)], 0.0, "iteration from P0=0 must stay exactly at 0");
    assert_eq!(low.gain[(0, 0)], 0.0);
    assert!((low.closed_loop_spectral_radius - 2.0).abs() <= 1e-9);
    assert_eq!(low.classification, Stability::NonStabilizing);

    println!("PASS  criterion 1 — scalar Riccati equation has both fixed points, with the documented gains");
}

#[test]
fn acceptance_2_discounted_riccati() {
    let alpha = 0.9;
    let problem = build_lq_scalar(2.0, 0.0, 1.0, alpha).unwrap();
    let expected = (alpha * 4.0 - 1.0) / alpha;

    let image = riccati_map(&Mat::scalar(expected), &problem, 0.0).unwrap();
    let residual = (image[(0, 0)] - expected).abs();
    assert!(residual <= 1e-10, "discounted fixed-point residual {residual:e}");

    let schedule = DeltaSchedule::until_below(0.1, 0.1, 1e-11).unwrap();
    let homotopy = p_hat_via_delta_limit(&problem, &schedule, 1e-12).unwrap();
    let gap = (homotopy.solution.p[(0, 0)] - expected).abs();
    assert!(gap <= 1e-8, "homotopy limit off by {gap:e}");

    println!("PASS  criterion 2 — discounted scalar fixed point verified and reached by the homotopy");
}

#[test]
fn acceptance_3_delta_homotopy() {
    // Controllable but undetectable (Q = 0) two-state pair.
    let problem = LqProblem::new(
        Mat::from_rows(&[vec![1.4, 0.4], vec![0.2, 0.8]]).unwrap(),
        Mat::from_rows(&[vec![1.0], vec![0.5]]).unwrap(),
        Mat::zeros(2, 2),
        Mat::scalar(1.0),
        1.0,
    )
    .unwrap();
    // The first six rungs are the specified weights 1e-1..1e-6; the
    // schedule continues to 1e-10 so the reported limit is sharp.
    let schedule = DeltaSchedule::new(0.1, 0.1, 10).unwrap();
    let homotopy = p_hat_via_delta_limit(&problem, &schedule, 1e-12).unwrap();

    for k in 0..5 {
        let diff = homotopy.steps[k].p.sub(&homotopy.steps[k + 1].p);
        let min_eig = diff.min_sym_eigenvalue();
        assert!(min_eig >= -1e-7, "P_delta not PSD-order nonincreasing at rung {k}: {min_eig:e}");
    }
    assert!(
        homotopy.solution.fixed_point_residual <= 1e-6,
        "unperturbed residual {:e}",
        homotopy.solution.fixed_point_residual
    );
    assert_eq!(homotopy.solution.classification, Stability::Stabilizing);
    match linear_policy_cost(&problem, &homotopy.solution.gain).unwrap() {
        LinearPolicyCost::Converged(p_l) => {
            let gap = p_l.sub(&homotopy.solution.p).max_abs();
            assert!(gap <= 1e-6, "policy cost differs from the limit by {gap:e}");
        }
        LinearPolicyCost::Divergent => panic!("extracted gain must be stabilizing"),
    }

    // Non-stabilizable pair: the perturbed equation has no solution and the
    // iteration reports divergence.
    let hopeless = LqProblem::new(
        Mat::scalar(2.0),
        Mat::scalar(0.0),
        Mat::scalar(1.0),
        Mat::scalar(1.0),
        1.0,
    )
    .unwrap();
    let err = p_hat_via_delta_limit(&hopeless, &DeltaSchedule::new(0.1, 0.1, 6).unwrap(), 1e-10);
    assert_eq!(err.unwrap_err(), RiccatiError::Divergence { delta: 0.1 });

    println!("PASS  criterion 3 — perturbation homotopy is monotone, lands on a stabilizing solution, and flags the non-stabilizable pair");
}

#[test]
fn acceptance_4_stopping_solution_zoo() {
    let params = StoppingParams::new(1.0, 0.5).unwrap();
    let radii = log_spaced_radii(1e-6, 10.0, 1000);
    let anchors = [0.3, 0.07, 1.9];

    let mut kinds = vec![
        StoppingSolutionKind::JStar,
        StoppingSolutionKind::JPlus,
        StoppingSolutionKind::JHatPDelta(0.1),
        StoppingSolutionKind::JHatPPlusDelta(0.1),
    ];
    for &x0 in &anchors {
        kinds.push(StoppingSolutionKind::Middle(x0));
    }
    for kind in &kinds {
        let residual = stopping_bellman_residual(&params, kind, &radii);
        assert!(residual <= 1e-12, "residual {residual:e} for {kind:?}");
    }

    for &x0 in &anchors {
        for &r in &radii {
            let lo = stopping_value(&params, &StoppingSolutionKind::JStar, r);
            let mid = stopping_value(&params, &StoppingSolutionKind::Middle(x0), r);
            let hi = stopping_value(&params, &StoppingSolutionKind::JPlus, r);
            assert!(lo <= mid && mid <= hi, "ordering violated at r={r}, x0={x0}");
        }
    }

    assert_eq!(stopping_value(&params, &StoppingSolutionKind::JStar, 0.2), Finite(0.4));
    // One ulp of slack: the decimal literal 0.44 is not the float product
    // (1.1/0.5)*fl(0.2), though both name the same real to 16 digits.
    let perturbed = stopping_value(&params, &StoppingSolutionKind::JHatPDelta(0.1), 0.2).as_f64();
    assert!((perturbed - 0.44).abs() <= 1e-15, "spot value {perturbed:.17}");

    println!("PASS  criterion 4 — all five closed-form solution families solve their one-step equations and are ordered");
}

#[test]
fn acceptance_5_perturbation_limits() {
    // Closed forms: the perturbed optimum approaches the smallest solution
    // linearly in the weight.
    let params = StoppingParams::new(1.0, 0.5).unwrap();
    let radii = log_spaced_radii(1e-6, 10.0, 1000);
    let bound_factor = 10.0 / (1.0 - params.gamma) * 2.0;
    let mut previous = f64::INFINITY;
    for k in 1..=5 {
        let delta = 10f64.powi(-k);
        let max_gap = radii
            .iter()
            .map(|&r| {
                stopping_value(&params, &StoppingSolutionKind::JHatPDelta(delta), r).as_f64()
                    - stopping_value(&params, &StoppingSolutionKind::JStar, r).as_f64()
            })
            .fold(0.0_f64, f64::max);
        assert!(max_gap <= delta * bound_factor, "gap {max_gap:e} at delta {delta:e}");
        assert!(max_gap < previous, "gap must shrink with the weight");
        previous = max_gap;
    }

    // Finite instances: the perturbation limit collapses to the
    // terminating optimum exactly, state by state.
    for seed in 1000..1050u64 {
        let n_states = 2 + (seed as usize % 5);
        let max_controls = 1 + (seed as usize % 3);
        let bias = if seed % 2 == 0 { 0.0 } else { 0.7 };
        let problem = build_random_problem(seed, n_states, max_controls, bias);
        let p = ForcingFunction::p_plus(&problem);
        let schedule = DeltaSchedule::default_for(&problem, &p, 1e-10);
        let limit = j_hat_via_delta_limit(&problem, &p, &schedule, 0.0);
        let j_plus = oracle_j_plus(&problem).unwrap();
        assert_eq!(limit.value, j_plus, "collapse failed on seed {seed}");
    }

    println!("PASS  criterion 5 — perturbed optima approach the restricted optimum linearly and collapse exactly on finite instances");
}

#[test]
fn acceptance_6_counterexample_battery() {
    let problem = build_spath_counterexample();
    let stay = spath_stay_policy();
    let exit = spath_exit_policy();

    // Smallest solution from below, both routes.
    assert_eq!(compute_j_star_vi(&problem, 1e-12, 100).value.get(1), Finite(0.0));
    assert_eq!(oracle_j_star(&problem).unwrap().get(1), Finite(0.0));

    // Largest solution from the all-infinite start, exactly, in at most
    // two sweeps; oracle agrees.
    let j_plus = compute_j_plus(&problem); // exactly n_states = 2 sweeps
    assert_eq!(j_plus.get(1), Finite(1.0));
    let vi_inf = value_iteration(&problem, &ValueFunction::infinity_init(&problem), 1e-12, 100);
    assert!(vi_inf.trace.iterations() <= 2);
    assert_eq!(vi_inf.value.get(1), Finite(1.0));
    assert_eq!(oracle_j_plus(&problem).unwrap().get(1), Finite(1.0));

    // Plain policy iteration repeats the unstable optimum under every tie
    // rule.
    for tie in [PiTie::LowestIndex, PiTie::PreferCurrent, PiTie::PreferChange] {
        let result = policy_iteration(&problem, &stay, tie, 100);
        assert_eq!(result.policy, stay, "tie rule {tie:?}");
        assert_eq!(result.value.get(1), Finite(0.0));
    }
    // From the stable policy the limit depends on the tie rule.
    let kept = policy_iteration(&problem, &exit, PiTie::PreferCurrent, 100);
    assert_eq!(kept.policy, exit);
    assert_eq!(kept.value.get(1), Finite(1.0));
    let switched = policy_iteration(&problem, &exit, PiTie::PreferChange, 100);
    assert_eq!(switched.policy, stay);
    assert_eq!(switched.value.get(1), Finite(0.0));

    // Perturbed policy iteration: halved weights give perturbed values
    // 1 + 2^-k, nonincreasing, and the final policy costs exactly 1.
    let p = ForcingFunction::p_plus(&problem);
    let schedule = DeltaSchedule::new(1.0, 0.5, 20).unwrap();
    let ppi = perturbed_policy_iteration(&problem, &p, &schedule, &exit, PiTie::PreferCurrent).unwrap();
    let mut last = f64::INFINITY;
    for (k, step) in ppi.trace.steps.iter().enumerate() {
        let v = step.value.as_ref().unwrap().get(1);
        assert_eq!(v, Finite(1.0 + 0.5_f64.powi(k as i32)));
        assert!(v.as_f64() < last);
        last = v.as_f64();
    }
    assert_eq!(ppi.value.get(1), Finite(1.0));

    // Optimistic policy iteration: one round from above; a start below the
    // restricted optimum settles on the fixed point min{1, J0(1)}.
    let from_above = optimistic_policy_iteration(
        &problem,
        &ValueFunction::from_values(&problem, vec![Finite(0.0), Finite(5.0)]).unwrap(),
        &MSchedule::default(),
        PiTie::LowestIndex,
        1e-12,
    )
    .unwrap();
    assert_eq!(from_above.trace.steps[1].value.as_ref().unwrap().get(1), Finite(1.0));
    assert_eq!(from_above.value.get(1), Finite(1.0));
    let from_below = optimistic_policy_iteration(
        &problem,
        &ValueFunction::from_values(&problem, vec![Finite(0.0), Finite(0.5)]).unwrap(),
        &MSchedule::default(),
        PiTie::LowestIndex,
        1e-12,
    )
    .unwrap();
    assert_eq!(from_below.value.get(1), Finite(0.5));

    println!("PASS  criterion 6 — two-state battery reproduces every documented algorithm behavior");
}

#[test]
fn acceptance_7_random_suite_invariants() {
    let config = SuiteConfig {
        base_seed: 0,
        count: 100,
        max_states: 6,
        max_controls: 3,
        monotone_pairs_per_instance: 10, // 1000 ordered pairs across the suite
    };
    let report = run_suite(&config, 1);
    assert_eq!(report.instances.len(), 100);
    if let Some((instance, check)) = report.first_failure() {
        panic!("seed {} failed {}: {}", instance.seed, check.name, check.detail);
    }

    println!(
        "PASS  criterion 7 — {} checks over 100 seeded instances (oracle agreement, ordering, sandwich, monotonicity, fast PI)",
        report.total_checks()
    );
}

#[test]
fn acceptance_8_discretization_phenomenon() {
    let params = StoppingParams::new(1.0, 0.5).unwrap();
    let problem = build_stopping_discretization(&params, 2.0, 20).unwrap();

    let from_zero = compute_j_star_vi(&problem, 1e-12, 10_000).value;
    let from_inf = compute_j_plus(&problem);
    assert!(from_zero.sup_gap(&from_inf) <= Finite(1e-9), "grid problem must have a unique solution");

    for (k, &r) in stopping_grid_radii(&params, 2.0, 20).iter().enumerate() {
        let grid = from_zero.get(k).as_f64();
        let continuous_smallest = stopping_value(&params, &StoppingSolutionKind::JStar, r).as_f64();
        assert!(
            (grid - continuous_smallest).abs() <= 1e-9,
            "grid value {grid} vs continuous {continuous_smallest} at r={r}"
        );
        if r < 0.45 {
            // The continuous largest solution is the constant stop cost;
            // the grid's unique solution misses it by a wide margin.
            assert!(params.c - grid >= 0.1, "largest solution not missed at r={r}");
        }
    }
    assert_ne!(from_inf.get(19), Infinite);

    println!("PASS  criterion 8 — any grid discretization keeps only the smallest solution and loses the largest");
}
