//! Minimum-energy stable control via the perturbation homotopy.
//!
//! With `Q = 0` the state is free, the unrestricted optimum is `P = 0`,
//! and the optimal policy may simply let an unstable system drift. Adding
//! the excursion penalty `δ‖x‖²` makes the problem detectable, so each
//! `δ`-perturbed Riccati equation has a unique PSD solution `P_δ`; driving
//! `δ ↓ 0` recovers the *largest* solution of the unperturbed equation —
//! the cost of the cheapest stabilizing linear policy.
//!
//! ```bash
//! cargo run -p semidp --example minimum_energy_homotopy
//! ```

use semidp::matrix::Mat;
use semidp::riccati::{linear_policy_cost, p_hat_via_delta_limit, LinearPolicyCost, LqProblem};
use semidp::solvers::DeltaSchedule;

fn main() {
    // Unstable two-state system, controllable through one input, no state
    // penalty.
    let problem = LqProblem::new(
        Mat::from_rows(&[vec![1.4, 0.4], vec![0.2, 0.8]]).unwrap(),
        Mat::from_rows(&[vec![1.0], vec![0.5]]).unwrap(),
        Mat::zeros(2, 2),
        Mat::scalar(1.0),
        1.0,
    )
    .unwrap();

    let schedule = DeltaSchedule::new(0.1, 0.1, 10).unwrap();
    let homotopy = p_hat_via_delta_limit(&problem, &schedule, 1e-12).unwrap();

    println!("delta        P[0,0]          P[0,1]          P[1,1]        solve iters");
    for step in &homotopy.steps {
        println!(
            "{:<10.0e}  {:<14.10}  {:<14.10}  {:<12.10}  {}",
            step.delta,
            step.p[(0, 0)],
            step.p[(0, 1)],
            step.p[(1, 1)],
            step.iterations
        );
    }

    let sol = &homotopy.solution;
    println!("\nlimit:");
    println!("  unperturbed residual   {:.3e}", sol.fixed_point_residual);
    println!("  gain                   [{:.8}, {:.8}]", sol.gain[(0, 0)], sol.gain[(0, 1)]);
    println!("  closed-loop radius     {:.8} ({:?})", sol.closed_loop_spectral_radius, sol.classification);
    match linear_policy_cost(&problem, &sol.gain).unwrap() {
        LinearPolicyCost::Converged(p_l) => println!(
            "  policy-cost cross-check |P_L - P| = {:.3e} (the gain's exact cost reproduces the limit)",
            p_l.sub(&sol.p).max_abs()
        ),
        LinearPolicyCost::Divergent => unreachable!("extracted gain is stabilizing"),
    }

    // Without stabilizability there is nothing to converge to: the
    // perturbed equation has no solution and the iteration detects it.
    let hopeless =
        LqProblem::new(Mat::scalar(2.0), Mat::scalar(0.0), Mat::scalar(1.0), Mat::scalar(1.0), 1.0)
            .unwrap();
    match p_hat_via_delta_limit(&hopeless, &DeltaSchedule::new(0.1, 0.1, 6).unwrap(), 1e-10) {
        Err(e) => println!("\nnon-stabilizable pair (A=2, B=0): {e}"),
        Ok(_) => unreachable!("uncontrollable unstable mode cannot be stabilized"),
    }
}
