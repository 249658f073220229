//! Ground truth by exhaustive enumeration.
//!
//! On desk-scale instances every stationary policy can be enumerated and
//! evaluated exactly, which certifies the solvers' outputs independently of
//! any iterative scheme:
//!
//! * `oracle_j_star` minimizes the exact policy cost over all stationary
//!   policies. On finite deterministic problems with nonnegative costs this
//!   attains the optimum over arbitrary (history-dependent) policies: any
//!   finite-cost trajectory either reaches the destination or ends in a
//!   zero-cost cycle, and removing loops from a path never increases its
//!   cost, so a stationary policy realizes the same value.
//! * `oracle_j_plus` restricts the minimum to policies whose rollout from
//!   the queried state reaches the destination.
//!
//! The enumerator refuses instances above a policy-count cap rather than
//! sampling; an oracle must not be approximate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{ExtendedCost, Finite};
use crate::model::{
    evaluate_policy, is_p_stable_from, trajectory, FiniteProblem, ForcingFunction, StationaryPolicy,
    ValueFunction,
};
use crate::operators::bellman_residual;
use crate::tolerances::ORACLE_ENUM_CAP;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance has {count} stationary policies, above the enumeration cap {cap}")]
    CapExceeded { count: u128, cap: u64 },
}

/// Lexicographic iterator over all stationary policies (the control index
/// at state 0 varies slowest).
#[derive(Debug)]
pub struct PolicyEnumerator<'a> {
    problem: &'a FiniteProblem,
    current: Option<Vec<usize>>,
}

impl Iterator for PolicyEnumerator<'_> {
    type Item = StationaryPolicy;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.current.as_mut()?;
        let item = StationaryPolicy::from_raw(current.clone());
        // Advance like a mixed-radix counter, least significant digit last.
        let mut x = current.len();
        loop {
            if x == 0 {
                self.current = None;
                break;
            }
            x -= 1;
            if current[x] + 1 < self.problem.num_controls(x) {
                current[x] += 1;
                break;
            }
            current[x] = 0;
        }
        Some(item)
    }
}

/// Total number of stationary policies, or `None` on overflow.
pub fn policy_count(problem: &FiniteProblem) -> Option<u128> {
    problem
        .states()
        .try_fold(1u128, |acc, x| acc.checked_mul(problem.num_controls(x) as u128))
}

/// Deterministic lexicographic enumeration of all stationary policies,
/// refused above `cap`.
pub fn enumerate_stationary_policies_with_cap(
    problem: &FiniteProblem,
    cap: u64,
) -> Result<PolicyEnumerator<'_>, OracleError> {
    let count = policy_count(problem).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(OracleError::CapExceeded { count, cap });
    }
    Ok(PolicyEnumerator { problem, current: Some(vec![0; problem.n_states()]) })
}

/// Enumeration under the default cap of [`ORACLE_ENUM_CAP`] policies.
pub fn enumerate_stationary_policies(
    problem: &FiniteProblem,
) -> Result<PolicyEnumerator<'_>, OracleError> {
    enumerate_stationary_policies_with_cap(problem, ORACLE_ENUM_CAP)
}

/// Per-policy record inside an [`OracleReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub policy: StationaryPolicy,
    pub value: ValueFunction,
    /// Per state: does the rollout from there reach the destination?
    pub terminating_from: Vec<bool>,
    /// Per state: is the policy `p`-stable from there (for the report's
    /// forcing function)? On finite problems this mask always equals
    /// `terminating_from`.
    pub p_stable_from: Vec<bool>,
}

/// Exhaustive certification record for one instance: both distinguished
/// optima plus the full per-policy table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub j_star: ValueFunction,
    pub j_plus: ValueFunction,
    pub per_policy: Vec<PolicyRecord>,
}

impl OracleReport {
    pub fn build(problem: &FiniteProblem, p: &ForcingFunction) -> Result<Self, OracleError> {
        let n = problem.n_states();
        let mut j_star = vec![ExtendedCost::Infinite; n];
        let mut j_plus = vec![ExtendedCost::Infinite; n];
        let mut per_policy = Vec::new();
        for policy in enumerate_stationary_policies(problem)? {
            let value = evaluate_policy(problem, &policy);
            let terminating_from: Vec<bool> = problem
                .states()
                .map(|x| trajectory(problem, &policy, x, p).reached_destination())
                .collect();
            let p_stable_from: Vec<bool> =
                problem.states().map(|x| is_p_stable_from(problem, &policy, p, x)).collect();
            for x in problem.states() {
                j_star[x] = j_star[x].min(value.get(x));
                if terminating_from[x] {
                    j_plus[x] = j_plus[x].min(value.get(x));
                }
            }
            per_policy.push(PolicyRecord { policy, value, terminating_from, p_stable_from });
        }
        Ok(OracleReport {
            j_star: ValueFunction::from_raw(j_star),
            j_plus: ValueFunction::from_raw(j_plus),
            per_policy,
        })
    }
}

/// Minimum exact policy cost over stationary policies whose rollout from
/// each queried state reaches the destination; infinite where none does.
pub fn oracle_j_plus(problem: &FiniteProblem) -> Result<ValueFunction, OracleError> {
    let p = ForcingFunction::p_plus(problem);
    let mut best = vec![ExtendedCost::Infinite; problem.n_states()];
    for policy in enumerate_stationary_policies(problem)? {
        let value = evaluate_policy(problem, &policy);
        for x in problem.states() {
            if trajectory(problem, &policy, x, &p).reached_destination() {
                best[x] = best[x].min(value.get(x));
            }
        }
    }
    Ok(ValueFunction::from_raw(best))
}

/// Minimum exact policy cost over all stationary policies.
pub fn oracle_j_star(problem: &FiniteProblem) -> Result<ValueFunction, OracleError> {
    let mut best = vec![ExtendedCost::Infinite; problem.n_states()];
    for policy in enumerate_stationary_policies(problem)? {
        let value = evaluate_policy(problem, &policy);
        for x in problem.states() {
            best[x] = best[x].min(value.get(x));
        }
    }
    Ok(ValueFunction::from_raw(best))
}

/// Whether `j` violates the fixed-point equation by at most `tol` in
/// sup-norm (infinite values agreeing on both sides are violations of zero).
pub fn verify_fixed_point(problem: &FiniteProblem, j: &ValueFunction, tol: f64) -> bool {
    bellman_residual(problem, j) <= Finite(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::Infinite;
    use crate::instances::{build_random_problem, build_spath_counterexample};
    use crate::model::ProblemSpec;
    use crate::solvers::compute_j_plus;

    #[test]
    fn counterexample_has_four_policies() {
        let problem = build_spath_counterexample();
        let all: Vec<_> = enumerate_stationary_policies(&problem).unwrap().collect();
        assert_eq!(all.len(), 4);
        // Lexicographic: state 0 varies slowest.
        assert_eq!(all[0].choices(), &[0, 0]);
        assert_eq!(all[1].choices(), &[0, 1]);
        assert_eq!(all[2].choices(), &[1, 0]);
        assert_eq!(all[3].choices(), &[1, 1]);
    }

    #[test]
    fn policy_counts() {
        let problem = build_spath_counterexample();
        assert_eq!(policy_count(&problem), Some(4));

        let single = FiniteProblem::new(ProblemSpec {
            n_states: 1,
            destination: 0,
            controls: vec![vec!["a".into(), "b".into()]],
            next: vec![vec![0, 0]],
            cost: vec![vec![Finite(0.0), Finite(0.0)]],
            forcing: None,
        })
        .unwrap();
        assert_eq!(enumerate_stationary_policies(&single).unwrap().count(), 2);

        let spec = ProblemSpec {
            n_states: 3,
            destination: 0,
            controls: vec![vec!["a".into(), "b".into()]; 3],
            next: vec![vec![0, 0]; 3],
            cost: vec![vec![Finite(0.0), Finite(0.0)], vec![Finite(1.0), Finite(2.0)], vec![
                Finite(1.0),
                Finite(2.0),
            ]],
            forcing: None,
        };
        let three = FiniteProblem::new(spec).unwrap();
        assert_eq!(enumerate_stationary_policies(&three).unwrap().count(), 8);
    }

    #[test]
    fn cap_is_enforced() {
        let problem = build_spath_counterexample();
        let err = enumerate_stationary_policies_with_cap(&problem, 3).unwrap_err();
        assert_eq!(err, OracleError::CapExceeded { count: 4, cap: 3 });
    }

    #[test]
    fn counterexample_optima() {
        let problem = build_spath_counterexample();
        assert_eq!(oracle_j_star(&problem).unwrap().get(1), Finite(0.0));
        assert_eq!(oracle_j_plus(&problem).unwrap().get(1), Finite(1.0));
    }

    #[test]
    fn j_plus_infinite_when_destination_unreachable() {
        let spec = ProblemSpec {
            n_states: 2,
            destination: 0,
            controls: vec![vec!["u".into()], vec!["u".into()]],
            next: vec![vec![0], vec![1]],
            cost: vec![vec![Finite(0.0)], vec![Finite(3.0)]],
            forcing: None,
        };
        let problem = FiniteProblem::new(spec).unwrap();
        assert_eq!(oracle_j_plus(&problem).unwrap().get(1), Infinite);
    }

    #[test]
    fn oracle_agrees_with_vi_on_a_random_instance() {
        let problem = build_random_problem(7, 4, 2, 0.5);
        assert_eq!(oracle_j_plus(&problem).unwrap(), compute_j_plus(&problem));
    }

    #[test]
    fn report_orders_and_masks() {
        let problem = build_spath_counterexample();
        let p = ForcingFunction::p_plus(&problem);
        let report = OracleReport::build(&problem, &p).unwrap();
        assert!(report.j_star.pointwise_le(&report.j_plus));
        for record in &report.per_policy {
            assert_eq!(record.terminating_from, record.p_stable_from);
        }
    }

    #[test]
    fn fixed_point_verifier() {
        let problem = build_spath_counterexample();
        let j_star = oracle_j_star(&problem).unwrap();
        let j_plus = oracle_j_plus(&problem).unwrap();
        assert!(verify_fixed_point(&problem, &j_star, 0.0));
        assert!(verify_fixed_point(&problem, &j_plus, 0.0));
        let above =
            ValueFunction::from_values(&problem, vec![Finite(0.0), Finite(2.0)]).unwrap();
        assert!(!verify_fixed_point(&problem, &above, 1e-9));
    }
}
