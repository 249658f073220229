//! The two-state instance where every algorithm's answer depends on where
//! it starts and how ties are broken.
//!
//! State 1 can move to the destination for a cost of 1, or stay put for
//! free. Staying forever is optimal (total cost 0) but never reaches the
//! destination; moving is the only stable behavior. The optimality
//! equation has a whole segment of solutions `J(1) ∈ [0, 1]`, with the
//! unrestricted optimum at the bottom and the terminating optimum at the
//! top.
//!
//! ```bash
//! cargo run -p semidp --example pi_counterexample
//! ```

use semidp::cost::Finite;
use semidp::instances::{build_spath_counterexample, spath_exit_policy, spath_stay_policy};
use semidp::model::{ForcingFunction, ValueFunction};
use semidp::solvers::{
    compute_j_plus, compute_j_star_vi, optimistic_policy_iteration, perturbed_policy_iteration,
    policy_iteration, DeltaSchedule, MSchedule, PiTie,
};

fn main() {
    let problem = build_spath_counterexample();
    let stay = spath_stay_policy();
    let exit = spath_exit_policy();

    println!("value iteration");
    let from_zero = compute_j_star_vi(&problem, 1e-12, 100).value;
    let from_inf = compute_j_plus(&problem);
    println!("  from the zero function:     J(1) = {}   (unrestricted optimum)", from_zero.get(1));
    println!("  from the infinite function: J(1) = {}   (terminating optimum)", from_inf.get(1));

    println!("\npolicy iteration (exact evaluation + greedy improvement)");
    for (label, mu0) in [("stay", &stay), ("exit", &exit)] {
        for tie in [PiTie::LowestIndex, PiTie::PreferCurrent, PiTie::PreferChange] {
            let result = policy_iteration(&problem, mu0, tie, 100);
            println!(
                "  start={label:<4} tie={tie:<13?} -> policy at 1: {:<4} J(1) = {}",
                problem.control_label(1, result.policy.get(1)),
                result.value.get(1),
            );
        }
    }
    println!("  (from the stable policy, the tie rule alone decides which fixed point PI keeps)");

    println!("\nperturbed policy iteration, weights 2^-k on the indicator forcing function");
    let p = ForcingFunction::p_plus(&problem);
    let schedule = DeltaSchedule::new(1.0, 0.5, 12).unwrap();
    let ppi = perturbed_policy_iteration(&problem, &p, &schedule, &exit, PiTie::PreferCurrent).unwrap();
    for step in ppi.trace.steps.iter().take(6) {
        println!(
            "  k={}  delta=2^-{}  perturbed J(1) = {}",
            step.iteration,
            step.iteration,
            step.value.as_ref().unwrap().get(1)
        );
    }
    println!("  ...  final unperturbed J(1) = {}", ppi.value.get(1));

    println!("\noptimistic policy iteration (one backup per round)");
    for start in [5.0, 0.5] {
        let j0 = ValueFunction::from_values(&problem, vec![Finite(0.0), Finite(start)]).unwrap();
        let result =
            optimistic_policy_iteration(&problem, &j0, &MSchedule::default(), PiTie::LowestIndex, 1e-12)
                .unwrap();
        println!(
            "  J0(1) = {start:<3} -> limit J(1) = {}  (inside convergence region: {})",
            result.value.get(1),
            result.within_convergence_region
        );
    }
    println!("  (every limit is a fixed point; only starts above the terminating optimum select it)");
}
