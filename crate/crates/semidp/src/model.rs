//! Problem representation and exact policy evaluation.
//!
//! A [`FiniteProblem`] is an explicit deterministic optimal-control instance:
//! a finite state set with a distinguished destination that is cost-free and
//! absorbing, per-state control sets, a transition map, and nonnegative
//! (possibly infinite) stage costs. Trajectories under a stationary policy
//! are eventually periodic, so policy costs are computed exactly by rolling
//! forward until the destination is reached or a state repeats, and deciding
//! finite vs infinite from the per-lap cycle cost. No iterative tolerance is
//! involved anywhere in this module.
//!
//! Cost sums are always accumulated *backward* along a path
//! (`J(x) = g(x,u) + J(next)`), so the fixed-point identity of a policy's
//! cost function holds bit-for-bit, and every module that minimizes over
//! paths (value iteration, the enumeration oracle) produces bitwise
//! identical sums for identical paths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{ExtendedCost, Finite, Infinite};

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("problem must have at least one state")]
    NoStates,
    #[error("destination index {destination} out of range for {n_states} states")]
    DestinationOutOfRange { destination: usize, n_states: usize },
    #[error("state {state} has an empty control set")]
    EmptyControlSet { state: usize },
    #[error("per-state table lengths disagree at state {state}")]
    RaggedTables { state: usize },
    #[error("transition ({state},{control}) targets invalid state {target}")]
    BadTransition { state: usize, control: usize, target: usize },
    #[error("destination is not absorbing: control {control} moves it to {target}")]
    DestinationNotAbsorbing { control: usize, target: usize },
    #[error("destination is not cost-free: control {control} costs {cost}")]
    DestinationNotCostFree { control: usize, cost: ExtendedCost },
    #[error("invalid cost at ({state},{control}): must be nonnegative, not NaN")]
    InvalidCost { state: usize, control: usize },
    #[error("value function has {got} entries, problem has {expected} states")]
    ValueLengthMismatch { got: usize, expected: usize },
    #[error("value at destination must be 0, got {0}")]
    NonzeroAtDestination(ExtendedCost),
    #[error("policy chooses control {control} at state {state}, which has {available} controls")]
    PolicyControlOutOfRange { state: usize, control: usize, available: usize },
    #[error("forcing function must be 0 at the destination and positive elsewhere (state {state})")]
    InvalidForcing { state: usize },
    #[error("perturbation weight must be positive, got {0}")]
    NonpositiveDelta(f64),
}

/// Raw problem description, matching the JSON schema consumed by the CLI:
/// `{ "n_states", "destination", "controls", "next", "cost", "forcing"? }`.
/// Control labels may be any JSON scalar; they are kept as strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n_states: usize,
    pub destination: usize,
    pub controls: Vec<Vec<serde_json::Value>>,
    pub next: Vec<Vec<usize>>,
    pub cost: Vec<Vec<ExtendedCost>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<Vec<f64>>,
}

/// A deterministic optimal-control instance over states `0..n_states`, with
/// a cost-free absorbing destination. Immutable after construction; all
/// invariants are enforced by [`FiniteProblem::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProblem {
    n_states: usize,
    destination: usize,
    control_labels: Vec<Vec<String>>,
    next: Vec<Vec<usize>>,
    cost: Vec<Vec<ExtendedCost>>,
}

impl FiniteProblem {
    /// Validates a raw description. Rejects empty control sets, out-of-range
    /// transitions, negative costs, and any destination control that is not
    /// a cost-free self-loop.
    pub fn new(spec: ProblemSpec) -> Result<Self, ValidationError> {
        let n = spec.n_states;
        if n == 0 {
            return Err(ValidationError::NoStates);
        }
        if spec.destination >= n {
            return Err(ValidationError::DestinationOutOfRange {
                destination: spec.destination,
                n_states: n,
            });
        }
        if spec.controls.len() != n || spec.next.len() != n || spec.cost.len() != n {
            return Err(ValidationError::RaggedTables {
                state: spec.controls.len().min(spec.next.len()).min(spec.cost.len()),
            });
        }
        let mut labels = Vec::with_capacity(n);
        for x in 0..n {
            let m = spec.controls[x].len();
            if m == 0 {
                return Err(ValidationError::EmptyControlSet { state: x });
            }
            if spec.next[x].len() != m || spec.cost[x].len() != m {
                return Err(ValidationError::RaggedTables { state: x });
            }
            for (u, target) in spec.next[x].iter().enumerate() {
                if *target >= n {
                    return Err(ValidationError::BadTransition { state: x, control: u, target: *target });
                }
            }
            labels.push(
                spec.controls[x]
                    .iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect(),
            );
        }
        let t = spec.destination;
        for u in 0..spec.next[t].len() {
            if spec.next[t][u] != t {
                return Err(ValidationError::DestinationNotAbsorbing { control: u, target: spec.next[t][u] });
            }
            if spec.cost[t][u] != ExtendedCost::ZERO {
                return Err(ValidationError::DestinationNotCostFree { control: u, cost: spec.cost[t][u] });
            }
        }
        Ok(FiniteProblem {
            n_states: n,
            destination: t,
            control_labels: labels,
            next: spec.next,
            cost: spec.cost,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn num_controls(&self, state: usize) -> usize {
        self.next[state].len()
    }

    pub fn next_state(&self, state: usize, control: usize) -> usize {
        self.next[state][control]
    }

    pub fn stage_cost(&self, state: usize, control: usize) -> ExtendedCost {
        self.cost[state][control]
    }

    pub fn control_label(&self, state: usize, control: usize) -> &str {
        &self.control_labels[state][control]
    }

    pub fn states(&self) -> impl Iterator<Item = usize> {
        0..self.n_states
    }

    /// Exports back to the raw description form (labels become strings).
    pub fn to_spec(&self) -> ProblemSpec {
        ProblemSpec {
            n_states: self.n_states,
            destination: self.destination,
            controls: self
                .control_labels
                .iter()
                .map(|ls| ls.iter().map(|l| serde_json::Value::String(l.clone())).collect())
                .collect(),
            next: self.next.clone(),
            cost: self.cost.clone(),
            forcing: None,
        }
    }

    /// Sum over non-destination states of the largest finite stage cost.
    /// Any finite optimal cost is bounded by this (a finite-cost behavior is
    /// a simple path plus a zero-cost tail), so a value-iteration iterate
    /// exceeding it certifies an infinite optimal value.
    pub(crate) fn finite_cost_bound(&self) -> f64 {
        let mut bound = 0.0;
        for x in self.states() {
            if x == self.destination {
                continue;
            }
            let max_finite = self.cost[x]
                .iter()
                .filter_map(|c| c.finite_value())
                .fold(0.0_f64, f64::max);
            bound += max_finite;
        }
        bound
    }
}

/// A cost-to-go function: one extended value per state, pinned to 0 at the
/// destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    values: Vec<ExtendedCost>,
}

impl ValueFunction {
    /// The zero function.
    pub fn zero(problem: &FiniteProblem) -> Self {
        ValueFunction { values: vec![ExtendedCost::ZERO; problem.n_states()] }
    }

    /// `∞` off the destination, `0` at it. Value iteration started here
    /// computes, at sweep `k`, the optimal cost of reaching the destination
    /// in at most `k` steps.
    pub fn infinity_init(problem: &FiniteProblem) -> Self {
        let mut values = vec![Infinite; problem.n_states()];
        values[problem.destination()] = ExtendedCost::ZERO;
        ValueFunction { values }
    }

    pub fn from_values(problem: &FiniteProblem, values: Vec<ExtendedCost>) -> Result<Self, ValidationError> {
        if values.len() != problem.n_states() {
            return Err(ValidationError::ValueLengthMismatch {
                got: values.len(),
                expected: problem.n_states(),
            });
        }
        let at_t = values[problem.destination()];
        if at_t != ExtendedCost::ZERO {
            return Err(ValidationError::NonzeroAtDestination(at_t));
        }
        Ok(ValueFunction { values })
    }

    pub(crate) fn from_raw(values: Vec<ExtendedCost>) -> Self {
        ValueFunction { values }
    }

    pub fn get(&self, state: usize) -> ExtendedCost {
        self.values[state]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ExtendedCost> + '_ {
        self.values.iter().copied()
    }

    /// Sup-norm distance under the residual conventions of
    /// [`ExtendedCost::abs_gap`] (`∞` agreeing with `∞` contributes 0).
    pub fn sup_gap(&self, other: &ValueFunction) -> ExtendedCost {
        debug_assert_eq!(self.len(), other.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.abs_gap(*b))
            .max()
            .unwrap_or(ExtendedCost::ZERO)
    }

    pub fn pointwise_le(&self, other: &ValueFunction) -> bool {
        debug_assert_eq!(self.len(), other.len());
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

/// A stationary policy: one control index per state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationaryPolicy {
    choice: Vec<usize>,
}

impl StationaryPolicy {
    pub fn new(problem: &FiniteProblem, choice: Vec<usize>) -> Result<Self, ValidationError> {
        if choice.len() != problem.n_states() {
            return Err(ValidationError::ValueLengthMismatch {
                got: choice.len(),
                expected: problem.n_states(),
            });
        }
        for (state, &u) in choice.iter().enumerate() {
            if u >= problem.num_controls(state) {
                return Err(ValidationError::PolicyControlOutOfRange {
                    state,
                    control: u,
                    available: problem.num_controls(state),
                });
            }
        }
        Ok(StationaryPolicy { choice })
    }

    pub(crate) fn from_raw(choice: Vec<usize>) -> Self {
        StationaryPolicy { choice }
    }

    pub fn get(&self, state: usize) -> usize {
        self.choice[state]
    }

    pub fn choices(&self) -> &[usize] {
        &self.choice
    }

    /// Equality ignoring the destination, where the choice is immaterial
    /// (every control there is a cost-free self-loop).
    pub fn agrees_off_destination(&self, other: &StationaryPolicy, problem: &FiniteProblem) -> bool {
        problem
            .states()
            .filter(|&x| x != problem.destination())
            .all(|x| self.choice[x] == other.choice[x])
    }
}

/// A forcing function: a per-state excursion penalty with `p(t) = 0` and
/// `p(x) > 0` off the destination. It defines the perturbed problems and,
/// through them, which policies count as stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingFunction {
    values: Vec<f64>,
}

impl ForcingFunction {
    pub fn new(problem: &FiniteProblem, values: Vec<f64>) -> Result<Self, ValidationError> {
        if values.len() != problem.n_states() {
            return Err(ValidationError::ValueLengthMismatch {
                got: values.len(),
                expected: problem.n_states(),
            });
        }
        for (state, &v) in values.iter().enumerate() {
            let ok = if state == problem.destination() {
                v == 0.0
            } else {
                v > 0.0 && v.is_finite()
            };
            if !ok {
                return Err(ValidationError::InvalidForcing { state });
            }
        }
        Ok(ForcingFunction { values })
    }

    /// The indicator forcing function: 1 off the destination, 0 at it.
    /// Stability with respect to it means reaching the destination in
    /// finitely many steps.
    pub fn p_plus(problem: &FiniteProblem) -> Self {
        let mut values = vec![1.0; problem.n_states()];
        values[problem.destination()] = 0.0;
        ForcingFunction { values }
    }

    pub fn get(&self, state: usize) -> f64 {
        self.values[state]
    }
}

/// How a deterministic rollout ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryOutcome {
    /// The destination was reached after `steps` transitions.
    ReachedDestination { steps: usize },
    /// A state repeated; `visited[cycle_entry..]` is the cycle, closed by
    /// the arc from the last visited state back to `visited[cycle_entry]`.
    EnteredCycle { cycle_entry: usize },
}

/// Exact rollout record for one (policy, start state) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    /// States in visit order, without repeating the cycle-closing state.
    /// Ends with the destination when it is reached.
    pub visited: Vec<usize>,
    pub outcome: TrajectoryOutcome,
    /// Total accumulated stage cost over the infinite horizon.
    pub total_cost: ExtendedCost,
    /// Accumulated forcing values `Σ p(x_k)` over the infinite horizon.
    pub forcing_sum: ExtendedCost,
}

impl TrajectoryReport {
    pub fn reached_destination(&self) -> bool {
        matches!(self.outcome, TrajectoryOutcome::ReachedDestination { .. })
    }

    /// The perturbation term `w = δ · Σ p(x_k)` for a given weight.
    pub fn perturbation_term(&self, delta: f64) -> ExtendedCost {
        self.forcing_sum.scaled(delta)
    }

    /// Cost in the perturbed problem: `total_cost + δ · forcing_sum`.
    pub fn perturbed_cost(&self, delta: f64) -> ExtendedCost {
        self.total_cost + self.perturbation_term(delta)
    }
}

/// Rolls the system forward from `x0` under `policy` until the destination
/// is reached or a state repeats. Total cost is `∞` exactly when the rollout
/// enters a cycle with positive per-lap cost (or crosses an `∞`-cost arc);
/// the forcing sum is `∞` exactly when any cycle is entered, since forcing
/// values are positive off the destination.
pub fn trajectory(
    problem: &FiniteProblem,
    policy: &StationaryPolicy,
    x0: usize,
    p: &ForcingFunction,
) -> TrajectoryReport {
    let t = problem.destination();
    let mut visited = Vec::new();
    let mut position = vec![usize::MAX; problem.n_states()];
    let mut state = x0;
    loop {
        if state == t {
            visited.push(state);
            let steps = visited.len() - 1;
            let total_cost = backward_cost(problem, policy, &visited[..steps]);
            let forcing_sum = Finite(backward_forcing(p, &visited[..steps]));
            return TrajectoryReport {
                visited,
                outcome: TrajectoryOutcome::ReachedDestination { steps },
                total_cost,
                forcing_sum,
            };
        }
        if position[state] != usize::MAX {
            let cycle_entry = position[state];
            let lap: ExtendedCost = visited[cycle_entry..]
                .iter()
                .map(|&x| problem.stage_cost(x, policy.get(x)))
                .sum();
            // Nonnegative stage costs: a zero-lap cycle has every arc at 0,
            // so the prefix sum (which already crossed the cycle once) is
            // the exact total.
            let total_cost = if lap == ExtendedCost::ZERO {
                backward_cost(problem, policy, &visited)
            } else {
                Infinite
            };
            return TrajectoryReport {
                visited,
                outcome: TrajectoryOutcome::EnteredCycle { cycle_entry },
                total_cost,
                forcing_sum: Infinite,
            };
        }
        position[state] = visited.len();
        visited.push(state);
        state = problem.next_state(state, policy.get(state));
    }
}

fn backward_cost(problem: &FiniteProblem, policy: &StationaryPolicy, states: &[usize]) -> ExtendedCost {
    states
        .iter()
        .rev()
        .fold(ExtendedCost::ZERO, |acc, &x| problem.stage_cost(x, policy.get(x)) + acc)
}

fn backward_forcing(p: &ForcingFunction, states: &[usize]) -> f64 {
    states.iter().rev().fold(0.0, |acc, &x| p.get(x) + acc)
}

/// Exact cost function of a stationary policy.
///
/// Values are assigned by following each policy path to the destination or
/// into its cycle and backfilling `J(x) = g(x, μ(x)) + J(f(x, μ(x)))`, so
/// the returned function satisfies that identity bit-for-bit (with
/// saturation at `∞`). Zero-lap cycles evaluate to exactly 0 on the cycle;
/// positive-lap cycles to `∞`.
pub fn evaluate_policy(problem: &FiniteProblem, policy: &StationaryPolicy) -> ValueFunction {
    let n = problem.n_states();
    let t = problem.destination();
    let mut values: Vec<Option<ExtendedCost>> = vec![None; n];
    values[t] = Some(ExtendedCost::ZERO);

    for start in problem.states() {
        if values[start].is_some() {
            continue;
        }
        // Walk until a resolved state or a repeat within this walk.
        let mut path = Vec::new();
        let mut on_path = vec![false; n];
        let mut state = start;
        let terminal_value = loop {
            if let Some(v) = values[state] {
                break v;
            }
            if on_path[state] {
                // Fresh cycle: resolve all its states first.
                let entry = path.iter().position(|&x| x == state).expect("state is on path");
                let lap: ExtendedCost = path[entry..]
                    .iter()
                    .map(|&x| problem.stage_cost(x, policy.get(x)))
                    .sum();
                let cycle_value = if lap == ExtendedCost::ZERO { ExtendedCost::ZERO } else { Infinite };
                for &x in &path[entry..] {
                    values[x] = Some(cycle_value);
                }
                path.truncate(entry);
                break cycle_value;
            }
            on_path[state] = true;
            path.push(state);
            state = problem.next_state(state, policy.get(state));
        };
        let mut acc = terminal_value;
        for &x in path.iter().rev() {
            acc = problem.stage_cost(x, policy.get(x)) + acc;
            values[x] = Some(acc);
        }
    }

    ValueFunction::from_raw(values.into_iter().map(|v| v.expect("all states resolved")).collect())
}

/// Whether `policy` is `p`-stable from `x0`: both the total cost and the
/// accumulated forcing along the rollout are finite. On finite problems this
/// holds exactly when the rollout reaches the destination with finite cost,
/// independently of which positive forcing function is used.
pub fn is_p_stable_from(
    problem: &FiniteProblem,
    policy: &StationaryPolicy,
    p: &ForcingFunction,
    x0: usize,
) -> bool {
    let report = trajectory(problem, policy, x0, p);
    report.total_cost.is_finite() && report.forcing_sum.is_finite()
}

/// The perturbed problem: same structure, stage cost `g(x,u) + δ·p(x)`.
/// The destination stays cost-free because `p(t) = 0`.
pub fn perturbed_problem(
    problem: &FiniteProblem,
    p: &ForcingFunction,
    delta: f64,
) -> Result<FiniteProblem, ValidationError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(ValidationError::NonpositiveDelta(delta));
    }
    let mut perturbed = problem.clone();
    for x in 0..perturbed.n_states {
        let bump = Finite(delta * p.get(x));
        for c in perturbed.cost[x].iter_mut() {
            *c = *c + bump;
        }
    }
    Ok(perturbed)
}
