//! The one-step optimality and policy backup operators.
//!
//! `bellman_operator` is the minimization backup
//! `(TJ)(x) = min_u { g(x,u) + J(f(x,u)) }`; `policy_backup` is the
//! single-policy version, and `perturbed_policy_backup` adds the `δ·p(x)`
//! excursion penalty. All three read an immutable input function and write a
//! fresh output, so per-state evaluations are independent of order (Jacobi
//! semantics) and safe to parallelize.
//!
//! Greedy policy extraction takes an explicit tie rule. The fixed points of
//! `T` are not unique in this problem class, and which one policy iteration
//! settles on can hinge on how argmin ties are broken, so tie-breaking is a
//! parameter rather than an accident of iteration order.

use crate::cost::ExtendedCost;
use crate::model::{FiniteProblem, ForcingFunction, StationaryPolicy, ValueFunction};

/// Deterministic rule for choosing among minimizing controls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TieRule {
    /// The minimizing control with the lowest index.
    LowestIndex,
    /// The given policy's control whenever it minimizes, lowest index
    /// otherwise.
    PreferCurrent(StationaryPolicy),
    /// A minimizing control different from the given policy's whenever one
    /// exists, the policy's own otherwise.
    PreferChange(StationaryPolicy),
}

/// The optimality backup `(TJ)(x) = min_u { g(x,u) + J(f(x,u)) }`, with
/// saturating sums. The destination maps to 0.
pub fn bellman_operator(problem: &FiniteProblem, j: &ValueFunction) -> ValueFunction {
    let values = problem
        .states()
        .map(|x| {
            (0..problem.num_controls(x))
                .map(|u| backup_term(problem, j, x, u))
                .min()
                .expect("control sets are nonempty")
        })
        .collect();
    ValueFunction::from_raw(values)
}

/// The policy backup `(T_μ J)(x) = g(x,μ(x)) + J(f(x,μ(x)))`.
pub fn policy_backup(problem: &FiniteProblem, policy: &StationaryPolicy, j: &ValueFunction) -> ValueFunction {
    let values = problem
        .states()
        .map(|x| backup_term(problem, j, x, policy.get(x)))
        .collect();
    ValueFunction::from_raw(values)
}

/// The perturbed policy backup
/// `(T_{μ,δ} J)(x) = g(x,μ(x)) + δ·p(x) + J(f(x,μ(x)))`.
///
/// Sums are associated exactly as in [`policy_backup`] applied to the
/// `δ`-perturbed problem, so the two routes agree bit-for-bit.
pub fn perturbed_policy_backup(
    problem: &FiniteProblem,
    policy: &StationaryPolicy,
    p: &ForcingFunction,
    delta: f64,
    j: &ValueFunction,
) -> ValueFunction {
    let values = problem
        .states()
        .map(|x| {
            let u = policy.get(x);
            let stage = problem.stage_cost(x, u) + ExtendedCost::finite(delta * p.get(x));
            stage + j.get(problem.next_state(x, u))
        })
        .collect();
    ValueFunction::from_raw(values)
}

fn backup_term(problem: &FiniteProblem, j: &ValueFunction, x: usize, u: usize) -> ExtendedCost {
    problem.stage_cost(x, u) + j.get(problem.next_state(x, u))
}

/// Extracts a policy `μ` with `T_μ J = TJ`, resolving argmin ties with the
/// given rule. The minimum exists because control sets are finite and
/// nonempty.
pub fn greedy_policy(problem: &FiniteProblem, j: &ValueFunction, tie: &TieRule) -> StationaryPolicy {
    let choice = problem
        .states()
        .map(|x| {
            let best = (0..problem.num_controls(x))
                .map(|u| backup_term(problem, j, x, u))
                .min()
                .expect("control sets are nonempty");
            let minimizes = |u: usize| backup_term(problem, j, x, u) == best;
            let lowest = (0..problem.num_controls(x)).find(|&u| minimizes(u)).unwrap();
            match tie {
                TieRule::LowestIndex => lowest,
                TieRule::PreferCurrent(incumbent) => {
                    let held = incumbent.get(x);
                    if minimizes(held) {
                        held
                    } else {
                        lowest
                    }
                }
                TieRule::PreferChange(incumbent) => {
                    let held = incumbent.get(x);
                    (0..problem.num_controls(x))
                        .find(|&u| u != held && minimizes(u))
                        .unwrap_or(held)
                }
            }
        })
        .collect();
    StationaryPolicy::from_raw(choice)
}

/// Sup-norm violation of the fixed-point equation `J = TJ`, with states
/// where both sides are `∞` contributing 0 (an `∞` value there is a
/// legitimate fixed-point value, not an error).
pub fn bellman_residual(problem: &FiniteProblem, j: &ValueFunction) -> ExtendedCost {
    j.sup_gap(&bellman_operator(problem, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{Finite, Infinite};
    use crate::instances::{build_spath_counterexample, spath_exit_policy, spath_stay_policy};
    use crate::model::ValueFunction;

    fn vf(problem: &FiniteProblem, at_one: ExtendedCost) -> ValueFunction {
        ValueFunction::from_values(problem, vec![Finite(0.0), at_one]).unwrap()
    }

    #[test]
    fn backup_minimizes_with_saturation() {
        let problem = build_spath_counterexample();
        // J(1) = 0: staying is free, min{1+0, 0+0} = 0.
        assert_eq!(bellman_operator(&problem, &vf(&problem, Finite(0.0))).get(1), Finite(0.0));
        // J(1) = ∞: exiting wins, min{1+0, 0+∞} = 1.
        assert_eq!(bellman_operator(&problem, &vf(&problem, Infinite)).get(1), Finite(1.0));
    }

    #[test]
    fn policy_backup_matches_definition() {
        let problem = build_spath_counterexample();
        let j = vf(&problem, Finite(0.0));
        assert_eq!(policy_backup(&problem, &spath_exit_policy(), &j).get(1), Finite(1.0));
        assert_eq!(policy_backup(&problem, &spath_stay_policy(), &j).get(1), Finite(0.0));
        assert_eq!(policy_backup(&problem, &spath_exit_policy(), &j).get(0), Finite(0.0));
    }

    #[test]
    fn zero_delta_perturbed_backup_is_plain_backup() {
        let problem = build_spath_counterexample();
        let p = ForcingFunction::p_plus(&problem);
        let j = vf(&problem, Finite(2.0));
        for policy in [spath_stay_policy(), spath_exit_policy()] {
            assert_eq!(
                perturbed_policy_backup(&problem, &policy, &p, 0.0, &j),
                policy_backup(&problem, &policy, &j)
            );
        }
    }

    #[test]
    fn perturbed_backup_agrees_with_backup_on_perturbed_problem() {
        let problem = build_spath_counterexample();
        let p = ForcingFunction::p_plus(&problem);
        let delta = 0.3;
        let shifted = crate::model::perturbed_problem(&problem, &p, delta).unwrap();
        let j = vf(&problem, Finite(0.7));
        for policy in [spath_stay_policy(), spath_exit_policy()] {
            assert_eq!(
                perturbed_policy_backup(&problem, &policy, &p, delta, &j),
                policy_backup(&shifted, &policy, &j)
            );
        }
    }

    #[test]
    fn tie_rules_pick_the_documented_controls() {
        let problem = build_spath_counterexample();
        // J = restricted optimum: J(1) = 1. Both controls at state 1 tie.
        let j = vf(&problem, Finite(1.0));
        let exit = spath_exit_policy();
        let kept = greedy_policy(&problem, &j, &TieRule::PreferCurrent(exit.clone()));
        assert_eq!(kept.get(1), exit.get(1));
        let switched = greedy_policy(&problem, &j, &TieRule::PreferChange(exit.clone()));
        assert_eq!(switched.get(1), spath_stay_policy().get(1));
        // J = 0: staying (index 1) strictly beats exiting at state 1.
        let zero = vf(&problem, Finite(0.0));
        assert_eq!(greedy_policy(&problem, &zero, &TieRule::LowestIndex).get(1), 1);
        // No non-incumbent minimizer: the incumbent is kept.
        assert_eq!(
            greedy_policy(&problem, &zero, &TieRule::PreferChange(spath_stay_policy())).get(1),
            1
        );
    }

    #[test]
    fn residual_of_fixed_points_is_zero() {
        let problem = build_spath_counterexample();
        // Both J(1) = 0 and J(1) = 1 solve the fixed-point equation.
        assert_eq!(bellman_residual(&problem, &vf(&problem, Finite(0.0))), Finite(0.0));
        assert_eq!(bellman_residual(&problem, &vf(&problem, Finite(1.0))), Finite(0.0));
        // Anything in between is also a fixed point: min{1, v} = v for v <= 1.
        assert_eq!(bellman_residual(&problem, &vf(&problem, Finite(0.5))), Finite(0.0));
        // Above 1 it is not: min{1, 2} = 1, residual 1.
        assert_eq!(bellman_residual(&problem, &vf(&problem, Finite(2.0))), Finite(1.0));
    }
}
