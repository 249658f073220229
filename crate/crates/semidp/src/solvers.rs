//! Value iteration, exact and perturbed policy iteration, and the
//! optimistic (partial-evaluation) variant.
//!
//! The fixed-point equation solved here can have many solutions, and which
//! one an algorithm reaches depends on where it starts:
//!
//! * from the zero function, value iteration climbs to the unrestricted
//!   optimum `J*` (the smallest solution);
//! * from the all-infinite initial condition it descends to `J⁺`, the
//!   optimum over policies that reach the destination in finitely many
//!   steps (the largest solution), exactly, in at most `n_states` sweeps;
//! * perturbed policy iteration drives a vanishing excursion penalty
//!   `δ_k·p(x)` to zero and lands on the optimum over `p`-stable policies,
//!   which on finite problems collapses to `J⁺` for every positive forcing
//!   function.
//!
//! All policy evaluation is exact (trajectory-based, see
//! [`crate::model::evaluate_policy`]); no tolerance enters the perturbed
//! scheme except through the `δ` schedule itself.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{ExtendedCost, Finite, Infinite};
use crate::model::{
    evaluate_policy, is_p_stable_from, perturbed_problem, FiniteProblem, ForcingFunction,
    StationaryPolicy, ValueFunction,
};
use crate::operators::{bellman_operator, bellman_residual, greedy_policy, policy_backup, TieRule};
use crate::tolerances::DEFAULT_MAX_ITER;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("initial policy is not p-stable from state {state}")]
    UnstableStart { state: usize },
    #[error("policy produced at iteration {iteration} is not p-stable from state {state}")]
    AssumptionViolation { iteration: usize, state: usize },
    #[error("initial function violates J0 >= T J0 at state {state}")]
    PreconditionViolation { state: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

/// Geometric schedule of perturbation weights `δ_k = delta0 · decay^k`,
/// `k = 0..length`, strictly decreasing toward zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSchedule {
    pub delta0: f64,
    pub decay: f64,
    pub length: usize,
}

impl DeltaSchedule {
    pub fn new(delta0: f64, decay: f64, length: usize) -> Result<Self, SolverError> {
        if !(delta0 > 0.0) || !delta0.is_finite() {
            return Err(SolverError::InvalidSchedule(format!("delta0 must be positive, got {delta0}")));
        }
        if !(decay > 0.0 && decay < 1.0) {
            return Err(SolverError::InvalidSchedule(format!("decay must lie in (0,1), got {decay}")));
        }
        if length == 0 {
            return Err(SolverError::InvalidSchedule("length must be at least 1".into()));
        }
        Ok(DeltaSchedule { delta0, decay, length })
    }

    /// Schedule long enough that the final weight drops below `floor`.
    pub fn until_below(delta0: f64, decay: f64, floor: f64) -> Result<Self, SolverError> {
        let mut length = 1;
        let mut delta = delta0;
        while delta >= floor && length < 10_000 {
            delta *= decay;
            length += 1;
        }
        DeltaSchedule::new(delta0, decay, length)
    }

    /// Default schedule for a finite problem: `δ0 = 1`, halving, run until
    /// the final weight is below `tol · min_{x≠t} p(x) / n_states`, so the
    /// residual perturbation is below the resolution the caller asked for.
    pub fn default_for(problem: &FiniteProblem, p: &ForcingFunction, tol: f64) -> Self {
        let p_min = problem
            .states()
            .filter(|&x| x != problem.destination())
            .map(|x| p.get(x))
            .fold(f64::INFINITY, f64::min);
        let p_min = if p_min.is_finite() { p_min } else { 1.0 };
        let floor = (tol.max(1e-12) * p_min / problem.n_states() as f64).max(1e-300);
        DeltaSchedule::until_below(1.0, 0.5, floor).expect("default schedule parameters are valid")
    }

    pub fn deltas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.length).map(|k| self.delta0 * self.decay.powi(k as i32))
    }

    pub fn final_delta(&self) -> f64 {
        self.delta0 * self.decay.powi(self.length as i32 - 1)
    }
}

/// Number of policy backups applied per round of the optimistic scheme;
/// the last entry repeats beyond the end of the sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MSchedule {
    values: Vec<usize>,
}

impl MSchedule {
    pub fn constant(m: usize) -> Result<Self, SolverError> {
        MSchedule::from_sequence(vec![m])
    }

    pub fn from_sequence(values: Vec<usize>) -> Result<Self, SolverError> {
        if values.is_empty() || values.contains(&0) {
            return Err(SolverError::InvalidSchedule(
                "m-schedule must be a nonempty sequence of positive integers".into(),
            ));
        }
        Ok(MSchedule { values })
    }

    pub fn m_at(&self, k: usize) -> usize {
        self.values[k.min(self.values.len() - 1)]
    }
}

impl Default for MSchedule {
    fn default() -> Self {
        MSchedule { values: vec![1] }
    }
}

/// Incumbent-relative tie-breaking for the policy-improvement step. Each
/// round it is instantiated against the current policy (see
/// [`TieRule`]); the first round of a scheme with no incumbent falls back
/// to lowest-index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiTie {
    LowestIndex,
    PreferCurrent,
    PreferChange,
}

impl PiTie {
    fn resolve(self, incumbent: Option<&StationaryPolicy>) -> TieRule {
        match (self, incumbent) {
            (PiTie::LowestIndex, _) | (_, None) => TieRule::LowestIndex,
            (PiTie::PreferCurrent, Some(mu)) => TieRule::PreferCurrent(mu.clone()),
            (PiTie::PreferChange, Some(mu)) => TieRule::PreferChange(mu.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Sup-norm change dropped to the tolerance.
    Converged,
    /// Iteration budget exhausted before the stopping test fired.
    IterationCap,
    /// A finite-step exact fixed point (change exactly zero, or an exact
    /// finite-horizon argument applies).
    Exact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    /// Sup-norm fixed-point violation of this step's iterate (`∞` matching
    /// `∞` counts as zero).
    pub residual: ExtendedCost,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<ValueFunction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<StationaryPolicy>,
}

/// Per-iteration record of a solver run. Residuals are recorded at every
/// step; value/policy snapshots are taken at a stride (1 unless the
/// iteration budget is large) and can be thinned further for output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveTrace {
    pub steps: Vec<TraceStep>,
    pub termination: Termination,
}

impl SolveTrace {
    fn new() -> Self {
        SolveTrace { steps: Vec::new(), termination: Termination::IterationCap }
    }

    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    /// Copy with value/policy snapshots kept only every `stride` steps (and
    /// at the last step). Residuals are always kept.
    pub fn thinned(&self, stride: usize) -> SolveTrace {
        let stride = stride.max(1);
        let last = self.steps.len().saturating_sub(1);
        SolveTrace {
            steps: self
                .steps
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    if i % stride == 0 || i == last {
                        s.clone()
                    } else {
                        TraceStep { iteration: s.iteration, residual: s.residual, value: None, policy: None }
                    }
                })
                .collect(),
            termination: self.termination,
        }
    }

    /// Long-format CSV: `iter,state,value`, one row per snapshotted state.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iter,state,value")?;
        for step in &self.steps {
            if let Some(values) = &step.value {
                for (state, v) in values.iter().enumerate() {
                    writeln!(w, "{},{},{}", step.iteration, state, v)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ViResult {
    pub value: ValueFunction,
    pub trace: SolveTrace,
}

#[derive(Debug, Clone)]
pub struct PiResult {
    pub policy: StationaryPolicy,
    /// Exact (unperturbed) cost of the returned policy.
    pub value: ValueFunction,
    pub trace: SolveTrace,
}

#[derive(Debug, Clone)]
pub struct OpiResult {
    pub value: ValueFunction,
    pub policy: StationaryPolicy,
    pub trace: SolveTrace,
    /// Whether the start dominated `J⁺`: inside that region the limit is
    /// the restricted optimum; outside, the scheme still settles on some
    /// fixed point but the guarantee is void.
    pub within_convergence_region: bool,
}

#[derive(Debug, Clone)]
pub struct JHatResult {
    /// The perturbation limit, collapsed exactly: infinite where no stable
    /// policy exists, the exact unperturbed cost of the final extracted
    /// policy elsewhere.
    pub value: ValueFunction,
    /// Greedy policy of the final perturbed problem; it terminates from
    /// every state with finite perturbed value.
    pub policy: StationaryPolicy,
    /// The exact optimum of each perturbed problem, in schedule order;
    /// pointwise nonincreasing.
    pub per_delta: Vec<(f64, ValueFunction)>,
}

fn snapshot_stride(max_iter: usize) -> usize {
    if max_iter > 4096 {
        16
    } else {
        1
    }
}

/// Repeated optimality backups `J_{k+1} = TJ_k` from `j0`. Stops when the
/// sup-norm change is at most `tol` (states infinite on both sides count as
/// unchanged), flagging `Exact` when the change is exactly zero, or records
/// `IterationCap` in the trace.
pub fn value_iteration(problem: &FiniteProblem, j0: &ValueFunction, tol: f64, max_iter: usize) -> ViResult {
    let stride = snapshot_stride(max_iter);
    let mut trace = SolveTrace::new();
    let mut j = j0.clone();
    for k in 0..max_iter {
        let next = bellman_operator(problem, &j);
        let change = j.sup_gap(&next);
        trace.steps.push(TraceStep {
            iteration: k,
            residual: change,
            value: (k % stride == 0).then(|| j.clone()),
            policy: None,
        });
        j = next;
        if change <= Finite(tol) {
            trace.termination =
                if change == ExtendedCost::ZERO { Termination::Exact } else { Termination::Converged };
            return ViResult { value: j, trace };
        }
    }
    trace.termination = Termination::IterationCap;
    ViResult { value: j, trace }
}

/// The optimum over terminating policies, computed exactly.
///
/// Runs the backup for exactly `n_states` sweeps from the all-infinite
/// initial condition; the `k`-th iterate is the optimal cost of reaching
/// the destination in at most `k` steps, and an optimal terminating path
/// never needs more steps than there are states. No tolerance is involved.
pub fn compute_j_plus(problem: &FiniteProblem) -> ValueFunction {
    let mut j = ValueFunction::infinity_init(problem);
    for _ in 0..problem.n_states() {
        j = bellman_operator(problem, &j);
    }
    j
}

/// The unrestricted optimum via backups from the zero function.
///
/// Iterates climb monotonically. States whose optimal cost is infinite
/// never settle, so once every still-moving state has climbed past the sum
/// of the largest finite stage costs (an upper bound on any finite optimal
/// cost), those states are classified as infinite exactly and the run
/// stops.
pub fn compute_j_star_vi(problem: &FiniteProblem, tol: f64, max_iter: usize) -> ViResult {
    let bound = Finite(problem.finite_cost_bound());
    let stride = snapshot_stride(max_iter);
    let mut trace = SolveTrace::new();
    let mut j = ValueFunction::zero(problem);
    for k in 0..max_iter {
        let next = bellman_operator(problem, &j);
        let change = j.sup_gap(&next);
        trace.steps.push(TraceStep {
            iteration: k,
            residual: change,
            value: (k % stride == 0).then(|| j.clone()),
            policy: None,
        });
        if change <= Finite(tol) {
            trace.termination =
                if change == ExtendedCost::ZERO { Termination::Exact } else { Termination::Converged };
            return ViResult { value: next, trace };
        }
        let moving_settled_or_diverged = problem.states().all(|x| {
            j.get(x).abs_gap(next.get(x)) <= Finite(tol) || next.get(x) > bound
        });
        if moving_settled_or_diverged {
            let values = problem
                .states()
                .map(|x| if next.get(x) > bound { Infinite } else { next.get(x) })
                .collect();
            trace.termination = Termination::Exact;
            return ViResult { value: ValueFunction::from_raw(values), trace };
        }
        j = next;
    }
    trace.termination = Termination::IterationCap;
    ViResult { value: j, trace }
}

/// Exact policy iteration: evaluate, improve greedily under the tie rule,
/// stop when the improved policy matches the incumbent off the destination
/// (the choice at the destination never affects costs). The evaluated
/// sequence is pointwise nonincreasing; on termination the incumbent's cost
/// is a fixed point of the optimality backup.
pub fn policy_iteration(
    problem: &FiniteProblem,
    mu0: &StationaryPolicy,
    tie: PiTie,
    max_iter: usize,
) -> PiResult {
    let mut trace = SolveTrace::new();
    let mut mu = mu0.clone();
    let mut value = evaluate_policy(problem, &mu);
    for k in 0..max_iter {
        trace.steps.push(TraceStep {
            iteration: k,
            residual: bellman_residual(problem, &value),
            value: Some(value.clone()),
            policy: Some(mu.clone()),
        });
        let improved = greedy_policy(problem, &value, &tie.resolve(Some(&mu)));
        if improved.agrees_off_destination(&mu, problem) {
            trace.termination = Termination::Exact;
            return PiResult { policy: mu, value, trace };
        }
        mu = improved;
        value = evaluate_policy(problem, &mu);
    }
    trace.termination = Termination::IterationCap;
    PiResult { policy: mu, value, trace }
}

fn stable_domain(problem: &FiniteProblem) -> Vec<usize> {
    let j_plus = compute_j_plus(problem);
    problem.states().filter(|&x| j_plus.get(x).is_finite()).collect()
}

fn first_unstable_state(
    problem: &FiniteProblem,
    policy: &StationaryPolicy,
    p: &ForcingFunction,
    domain: &[usize],
) -> Option<usize> {
    domain.iter().copied().find(|&x| !is_p_stable_from(problem, policy, p, x))
}

/// Policy iteration on a vanishing sequence of perturbed problems.
///
/// At step `k` the incumbent is evaluated exactly on the `δ_k`-perturbed
/// problem and improved greedily against that evaluation. The start must be
/// `p`-stable from every state that admits a stable policy, and so must
/// every improved policy; a violation stops the run with a diagnostic
/// instead of silently continuing with an unstable policy, because the
/// convergence guarantee is void from that point on.
///
/// The recorded perturbed evaluations decrease pointwise; the returned
/// value is the exact unperturbed cost of the final policy.
pub fn perturbed_policy_iteration(
    problem: &FiniteProblem,
    p: &ForcingFunction,
    schedule: &DeltaSchedule,
    mu0: &StationaryPolicy,
    tie: PiTie,
) -> Result<PiResult, SolverError> {
    let domain = stable_domain(problem);
    if let Some(state) = first_unstable_state(problem, mu0, p, &domain) {
        return Err(SolverError::UnstableStart { state });
    }
    let mut trace = SolveTrace::new();
    let mut mu = mu0.clone();
    for (k, delta) in schedule.deltas().enumerate() {
        let shifted = perturbed_problem(problem, p, delta).expect("schedule weights are positive");
        let perturbed_value = evaluate_policy(&shifted, &mu);
        trace.steps.push(TraceStep {
            iteration: k,
            residual: bellman_residual(problem, &perturbed_value),
            value: Some(perturbed_value.clone()),
            policy: Some(mu.clone()),
        });
        let improved = greedy_policy(problem, &perturbed_value, &tie.resolve(Some(&mu)));
        if let Some(state) = first_unstable_state(problem, &improved, p, &domain) {
            return Err(SolverError::AssumptionViolation { iteration: k + 1, state });
        }
        mu = improved;
    }
    trace.termination = Termination::Converged;
    let value = evaluate_policy(problem, &mu);
    Ok(PiResult { policy: mu, value, trace })
}

/// Optimistic policy iteration: extract a greedy policy, apply its backup
/// `m_k` times, repeat. Requires `J0 ≥ TJ0` pointwise (checked; violation
/// is an error). Whether `J0` also dominates `J⁺` — the condition under
/// which the limit is the restricted optimum — is reported on the result
/// rather than enforced: starts below it still settle on a fixed point,
/// just not necessarily that one.
pub fn optimistic_policy_iteration(
    problem: &FiniteProblem,
    j0: &ValueFunction,
    m_schedule: &MSchedule,
    tie: PiTie,
    tol: f64,
) -> Result<OpiResult, SolverError> {
    let tj0 = bellman_operator(problem, j0);
    if let Some(state) = problem.states().find(|&x| tj0.get(x) > j0.get(x)) {
        return Err(SolverError::PreconditionViolation { state });
    }
    let within = compute_j_plus(problem).pointwise_le(j0);

    let mut trace = SolveTrace::new();
    let mut j = j0.clone();
    let mut incumbent: Option<StationaryPolicy> = None;
    for k in 0..DEFAULT_MAX_ITER {
        let mu = greedy_policy(problem, &j, &tie.resolve(incumbent.as_ref()));
        let mut next = policy_backup(problem, &mu, &j);
        let residual = j.sup_gap(&next); // T_mu J = TJ by construction
        for _ in 1..m_schedule.m_at(k) {
            next = policy_backup(problem, &mu, &next);
        }
        let change = j.sup_gap(&next);
        trace.steps.push(TraceStep {
            iteration: k,
            residual,
            value: Some(j.clone()),
            policy: Some(mu.clone()),
        });
        j = next;
        incumbent = Some(mu);
        if change <= Finite(tol) {
            trace.termination =
                if change == ExtendedCost::ZERO { Termination::Exact } else { Termination::Converged };
            return Ok(OpiResult {
                value: j,
                policy: incumbent.expect("at least one round ran"),
                trace,
                within_convergence_region: within,
            });
        }
    }
    trace.termination = Termination::IterationCap;
    Ok(OpiResult {
        value: j,
        policy: incumbent.expect("at least one round ran"),
        trace,
        within_convergence_region: within,
    })
}

/// Greedy policy of the `δ`-perturbed problem with respect to that
/// problem's exact optimum. Every cycle in the perturbed problem costs at
/// least `δ·p` per lap, so this policy terminates from every state with
/// finite perturbed value — a canonical `p`-stable policy.
pub fn delta_greedy_policy(problem: &FiniteProblem, p: &ForcingFunction, delta: f64) -> StationaryPolicy {
    let shifted = perturbed_problem(problem, p, delta).expect("delta must be positive");
    let j = compute_j_plus(&shifted);
    greedy_policy(&shifted, &j, &TieRule::LowestIndex)
}

/// The restricted optimum over `p`-stable policies as the limit of exact
/// perturbed optima.
///
/// Each `δ_k`-perturbed problem is solved exactly (its optimum is attained
/// by terminating policies, since every off-destination cycle has positive
/// perturbed cost), producing a pointwise nonincreasing sequence. The
/// returned value collapses the limit exactly: infinite where the perturbed
/// optimum is infinite, and elsewhere the exact unperturbed cost of the
/// final extracted policy. The schedule may stop early once consecutive
/// perturbed optima agree within `tol`.
pub fn j_hat_via_delta_limit(
    problem: &FiniteProblem,
    p: &ForcingFunction,
    schedule: &DeltaSchedule,
    tol: f64,
) -> JHatResult {
    let mut per_delta: Vec<(f64, ValueFunction)> = Vec::new();
    for delta in schedule.deltas() {
        let shifted = perturbed_problem(problem, p, delta).expect("schedule weights are positive");
        let jd = compute_j_plus(&shifted);
        let settled = per_delta
            .last()
            .is_some_and(|(_, prev)| prev.sup_gap(&jd) <= Finite(tol));
        per_delta.push((delta, jd));
        if settled {
            break;
        }
    }
    let (final_delta, final_perturbed) = per_delta.last().expect("schedule is nonempty");
    let shifted = perturbed_problem(problem, p, *final_delta).expect("schedule weights are positive");
    let policy = greedy_policy(&shifted, final_perturbed, &TieRule::LowestIndex);
    let unperturbed = evaluate_policy(problem, &policy);
    let values = problem
        .states()
        .map(|x| if final_perturbed.get(x).is_infinite() { Infinite } else { unperturbed.get(x) })
        .collect();
    JHatResult { value: ValueFunction::from_raw(values), policy, per_delta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_spath_counterexample, spath_exit_policy, spath_stay_policy};

    fn vf(problem: &FiniteProblem, at_one: ExtendedCost) -> ValueFunction {
        ValueFunction::from_values(problem, vec![Finite(0.0), at_one]).unwrap()
    }

    #[test]
    fn vi_from_zero_finds_smallest_solution() {
        let problem = build_spath_counterexample();
        let result = value_iteration(&problem, &ValueFunction::zero(&problem), 1e-10, 100);
        assert_eq!(result.value.get(1), Finite(0.0));
        assert_eq!(result.trace.termination, Termination::Exact);
        assert_eq!(result.trace.iterations(), 1);
    }

    #[test]
    fn vi_from_infinity_finds_largest_solution() {
        let problem = build_spath_counterexample();
        let result = value_iteration(&problem, &ValueFunction::infinity_init(&problem), 1e-10, 100);
        assert_eq!(result.value.get(1), Finite(1.0));
        // One sweep reaches the fixed point, the second certifies it.
        assert!(result.trace.iterations() <= 2);
    }

    #[test]
    fn vi_from_above_descends_to_largest_solution() {
        let problem = build_spath_counterexample();
        let result = value_iteration(&problem, &vf(&problem, Finite(5.0)), 1e-10, 100);
        assert_eq!(result.value.get(1), Finite(1.0));
    }

    #[test]
    fn j_plus_is_exact_in_n_sweeps() {
        let problem = build_spath_counterexample();
        assert_eq!(compute_j_plus(&problem).get(1), Finite(1.0));
    }

    #[test]
    fn j_plus_unreachable_destination_is_infinite() {
        use crate::model::ProblemSpec;
        // State 1 can only loop on itself.
        let spec = ProblemSpec {
            n_states: 2,
            destination: 0,
            controls: vec![vec!["u".into()], vec!["u".into()]],
            next: vec![vec![0], vec![1]],
            cost: vec![vec![Finite(0.0)], vec![Finite(0.0)]],
            forcing: None,
        };
        let problem = FiniteProblem::new(spec).unwrap();
        assert_eq!(compute_j_plus(&problem).get(1), Infinite);
        // The unrestricted optimum rides the free cycle instead.
        assert_eq!(compute_j_star_vi(&problem, 1e-10, 100).value.get(1), Finite(0.0));
    }

    #[test]
    fn j_plus_on_chain_counts_hops() {
        use crate::model::ProblemSpec;
        let spec = ProblemSpec {
            n_states: 3,
            destination: 0,
            controls: vec![vec!["u".into()], vec!["u".into()], vec!["u".into()]],
            next: vec![vec![0], vec![0], vec![1]],
            cost: vec![vec![Finite(0.0)], vec![Finite(1.0)], vec![Finite(1.0)]],
            forcing: None,
        };
        let problem = FiniteProblem::new(spec).unwrap();
        let j = compute_j_plus(&problem);
        assert_eq!(j.get(1), Finite(1.0));
        assert_eq!(j.get(2), Finite(2.0));
    }

    #[test]
    fn j_star_vi_classifies_diverging_states_as_infinite() {
        use crate::model::ProblemSpec;
        // State 1 loops at cost 1 or pays an infinite arc: optimal cost ∞.
        let spec = ProblemSpec {
            n_states: 2,
            destination: 0,
            controls: vec![vec!["u".into()], vec!["loop".into(), "jump".into()]],
            next: vec![vec![0], vec![1, 0]],
            cost: vec![vec![Finite(0.0)], vec![Finite(1.0), Infinite]],
            forcing: None,
        };
        let problem = FiniteProblem::new(spec).unwrap();
        let result = compute_j_star_vi(&problem, 1e-10, 10_000);
        assert_eq!(result.value.get(1), Infinite);
        assert_eq!(result.trace.termination, Termination::Exact);
    }

    #[test]
    fn zero_cost_problem_converges_in_one_sweep() {
        use crate::model::ProblemSpec;
        let spec = ProblemSpec {
            n_states: 2,
            destination: 0,
            controls: vec![vec!["u".into()], vec!["u".into()]],
            next: vec![vec![0], vec![0]],
            cost: vec![vec![Finite(0.0)], vec![Finite(0.0)]],
            forcing: None,
        };
        let problem = FiniteProblem::new(spec).unwrap();
        let result = compute_j_star_vi(&problem, 1e-10, 100);
        assert_eq!(result.value.get(1), Finite(0.0));
        assert_eq!(result.trace.iterations(), 1);
    }

    #[test]
    fn pi_from_stay_policy_repeats_it_under_every_tie_rule() {
        let problem = build_spath_counterexample();
        for tie in [PiTie::LowestIndex, PiTie::PreferCurrent, PiTie::PreferChange] {
            let result = policy_iteration(&problem, &spath_stay_policy(), tie, 100);
            assert_eq!(result.policy.get(1), spath_stay_policy().get(1), "tie rule {tie:?}");
            assert_eq!(result.value.get(1), Finite(0.0));
        }
    }

    #[test]
    fn pi_from_exit_policy_depends_on_tie_rule() {
        let problem = build_spath_counterexample();
        let kept = policy_iteration(&problem, &spath_exit_policy(), PiTie::PreferCurrent, 100);
        assert_eq!(kept.policy, spath_exit_policy());
        assert_eq!(kept.value.get(1), Finite(1.0));

        let switched = policy_iteration(&problem, &spath_exit_policy(), PiTie::PreferChange, 100);
        assert_eq!(switched.policy.get(1), spath_stay_policy().get(1));
        assert_eq!(switched.value.get(1), Finite(0.0));
    }

    #[test]
    fn perturbed_pi_rejects_unstable_start() {
        let problem = build_spath_counterexample();
        let p = ForcingFunction::p_plus(&problem);
        let schedule = DeltaSchedule::new(1.0, 0.5, 8).unwrap();
        let err = perturbed_policy_iteration(&problem, &p, &schedule, &spath_stay_policy(), PiTie::LowestIndex);
        assert_eq!(err.unwrap_err(), SolverError::UnstableStart { state: 1 });
    }

    #[test]
    fn perturbed_pi_halves_the_perturbed_value_each_step() {
        let problem = build_spath_counterexample();
        let p = ForcingFunction::p_plus(&problem);
        let schedule = DeltaSchedule::new(1.0, 0.5, 10).unwrap();
        let result =
            perturbed_policy_iteration(&problem, &p, &schedule, &spath_exit_policy(), PiTie::LowestIndex)
                .unwrap();
        for (k, step) in result.trace.steps.iter().enumerate() {
            let expected = 1.0 + 0.5_f64.powi(k as i32);
            assert_eq!(step.value.as_ref().unwrap().get(1), Finite(expected));
            assert_eq!(step.policy.as_ref().unwrap().get(1), spath_exit_policy().get(1));
        }
        assert_eq!(result.value.get(1), Finite(1.0));
    }

    #[test]
    fn optimistic_pi_reaches_restricted_optimum_in_one_round_from_above() {
        let problem = build_spath_counterexample();
        let j0 = vf(&problem, Finite(5.0));
        let result =
            optimistic_policy_iteration(&problem, &j0, &MSchedule::default(), PiTie::LowestIndex, 1e-12)
                .unwrap();
        assert!(result.within_convergence_region);
        assert_eq!(result.value.get(1), Finite(1.0));
        // The first round already lands on the restricted optimum.
        assert_eq!(result.trace.steps[0].value.as_ref().unwrap().get(1), Finite(5.0));
        assert_eq!(
            result.trace.steps.get(1).and_then(|s| s.value.as_ref()).map(|v| v.get(1)),
            Some(Finite(1.0))
        );
    }

    #[test]
    fn optimistic_pi_below_the_region_settles_on_another_fixed_point() {
        let problem = build_spath_counterexample();
        let j0 = vf(&problem, Finite(0.5));
        let result =
            optimistic_policy_iteration(&problem, &j0, &MSchedule::default(), PiTie::LowestIndex, 1e-12)
                .unwrap();
        assert!(!result.within_convergence_region);
        assert_eq!(result.value.get(1), Finite(0.5));
    }

    #[test]
    fn optimistic_pi_checks_descent_precondition() {
        // A violating start needs TJ0 > J0 somewhere; use an instance where
        // the only move costs more than the initial guess.
        use crate::model::ProblemSpec;
        let spec = ProblemSpec {
            n_states: 2,
            destination: 0,
            controls: vec![vec!["u".into()], vec!["u".into()]],
            next: vec![vec![0], vec![0]],
            cost: vec![vec![Finite(0.0)], vec![Finite(2.0)]],
            forcing: None,
        };
        let problem = FiniteProblem::new(spec).unwrap();
        let j0 = ValueFunction::from_values(&problem, vec![Finite(0.0), Finite(1.0)]).unwrap();
        let err = optimistic_policy_iteration(&problem, &j0, &MSchedule::default(), PiTie::LowestIndex, 1e-12);
        assert_eq!(err.unwrap_err(), SolverError::PreconditionViolation { state: 1 });
    }

    #[test]
    fn j_hat_limit_on_counterexample() {
        let problem = build_spath_counterexample();
        let p = ForcingFunction::p_plus(&problem);
        let schedule = DeltaSchedule::new(1.0, 0.5, 20).unwrap();
        let result = j_hat_via_delta_limit(&problem, &p, &schedule, 0.0);
        assert_eq!(result.value.get(1), Finite(1.0));
        // Perturbed optima 1 + δ_k decrease toward 1.
        for (k, (delta, jd)) in result.per_delta.iter().enumerate() {
            assert_eq!(*delta, 0.5_f64.powi(k as i32));
            assert_eq!(jd.get(1), Finite(1.0 + delta));
        }
        assert_eq!(result.policy.get(1), spath_exit_policy().get(1));
    }

    #[test]
    fn j_hat_limit_keeps_unreachable_states_infinite() {
        use crate::model::ProblemSpec;
        // State 2 only loops on itself at zero cost: no stable policy from
        // it, yet its unrestricted optimum is 0.
        let spec = ProblemSpec {
            n_states: 3,
            destination: 0,
            controls: vec![vec!["u".into()], vec!["u".into()], vec!["u".into()]],
            next: vec![vec![0], vec![0], vec![2]],
            cost: vec![vec![Finite(0.0)], vec![Finite(1.0)], vec![Finite(0.0)]],
            forcing: None,
        };
        let problem = FiniteProblem::new(spec).unwrap();
        let p = ForcingFunction::p_plus(&problem);
        let schedule = DeltaSchedule::new(1.0, 0.5, 10).unwrap();
        let result = j_hat_via_delta_limit(&problem, &p, &schedule, 0.0);
        assert_eq!(result.value.get(2), Infinite);
        assert_eq!(result.value.get(1), Finite(1.0));
    }

    #[test]
    fn delta_schedule_validation_and_default() {
        assert!(DeltaSchedule::new(0.0, 0.5, 4).is_err());
        assert!(DeltaSchedule::new(1.0, 1.0, 4).is_err());
        assert!(DeltaSchedule::new(1.0, 0.5, 0).is_err());
        let problem = build_spath_counterexample();
        let p = ForcingFunction::p_plus(&problem);
        let schedule = DeltaSchedule::default_for(&problem, &p, 1e-10);
        assert!(schedule.final_delta() < 1e-10 * 0.5);
    }

    #[test]
    fn trace_thinning_keeps_residuals() {
        let problem = build_spath_counterexample();
        let result = value_iteration(&problem, &vf(&problem, Finite(7.0)), 1e-10, 100);
        let thin = result.trace.thinned(10);
        assert_eq!(thin.steps.len(), result.trace.steps.len());
        assert!(thin.steps.iter().all(|s| s.residual == s.residual));
    }
}
