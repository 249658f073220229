//! Canonical instances: the scalar linear-quadratic family, the radial
//! optimal stopping problem with its full zoo of closed-form solutions, the
//! two-state shortest-path counterexample where policy iteration's limit
//! depends on tie-breaking, a seeded random-instance generator, and a
//! finite discretization of the stopping problem.
//!
//! The stopping problem: at radius `r > 0` either stop (move to the origin)
//! at cost `c`, or contract to radius `γr` at cost `r`. Its fixed-point
//! equation `J(r) = min{c, r + J(γr)}` has a continuum of solutions; the
//! closed forms here cover the smallest (`J*`), the largest (`J⁺`), the
//! perturbed optima for the forcing functions `r` and `1`, and a family of
//! middle solutions supported on a geometric orbit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cost::{ExtendedCost, Finite};
use crate::matrix::Mat;
use crate::model::{FiniteProblem, ProblemSpec, StationaryPolicy};
use crate::riccati::{LqProblem, RiccatiError};
use crate::tolerances::ORBIT_LOG_REL_TOL;

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("stop cost must be positive, got {0}")]
    BadStopCost(f64),
    #[error("contraction factor must lie in (0,1), got {0}")]
    BadContraction(f64),
    #[error("middle solution requires a positive anchor radius, got {0}")]
    BadAnchor(f64),
    #[error("discretization needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("random instance needs at least 2 states, got {0}")]
    TooFewStates(usize),
}

/// Parameters of the radial stopping problem: stop cost `c > 0` and
/// contraction factor `γ ∈ (0,1)`. Values depend on the radius only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingParams {
    pub c: f64,
    pub gamma: f64,
}

impl StoppingParams {
    pub fn new(c: f64, gamma: f64) -> Result<Self, InstanceError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(InstanceError::BadStopCost(c));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(InstanceError::BadContraction(gamma));
        }
        Ok(StoppingParams { c, gamma })
    }

    /// The radius below which continuing beats stopping under the smallest
    /// solution: `(1−γ)c`.
    pub fn stop_threshold(&self) -> f64 {
        (1.0 - self.gamma) * self.c
    }
}

/// Which closed-form solution of the stopping problem to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingSolutionKind {
    /// Smallest solution: `min{c, r/(1−γ)}`.
    JStar,
    /// Largest solution: `c` off the origin (stop as soon as possible).
    JPlus,
    /// Perturbed optimum for the forcing function `p(r) = r`:
    /// `min{c + δr, (1+δ)r/(1−γ)}`.
    JHatPDelta(f64),
    /// Perturbed optimum for the indicator forcing function: `c + δ` off
    /// the origin.
    JHatPPlusDelta(f64),
    /// A middle solution anchored at `x0 > 0`: `r/(1−γ)` on the part of
    /// the orbit `{γ^k·x0, k ≥ 0}` below the stop threshold, `c` at every
    /// other positive radius.
    Middle(f64),
}

/// Membership of `r` in the geometric orbit `{γ^k · x0 : k ≥ 0}`, decided
/// on the base-`γ` logarithm with a relative tolerance (exact membership of
/// a real in a geometric orbit is not float-decidable).
fn on_orbit(params: &StoppingParams, x0: f64, r: f64) -> bool {
    let k = (r / x0).ln() / params.gamma.ln();
    let nearest = k.round();
    nearest >= 0.0 && (k - nearest).abs() <= ORBIT_LOG_REL_TOL * k.abs().max(1.0)
}

/// Closed-form evaluation of the chosen solution at radius `r ≥ 0`. Every
/// variant is 0 at the origin.
pub fn stopping_value(params: &StoppingParams, kind: &StoppingSolutionKind, r: f64) -> ExtendedCost {
    assert!(r >= 0.0 && r.is_finite(), "radius must be a nonnegative real");
    if r == 0.0 {
        return ExtendedCost::ZERO;
    }
    let c = params.c;
    let gamma = params.gamma;
    let value = match kind {
        StoppingSolutionKind::JStar => (r / (1.0 - gamma)).min(c),
        StoppingSolutionKind::JPlus => c,
        StoppingSolutionKind::JHatPDelta(delta) => {
            ((1.0 + delta) / (1.0 - gamma) * r).min(c + delta * r)
        }
        StoppingSolutionKind::JHatPPlusDelta(delta) => c + delta,
        StoppingSolutionKind::Middle(x0) => {
            assert!(*x0 > 0.0, "middle solution needs a positive anchor");
            if r < params.stop_threshold() && on_orbit(params, *x0, r) {
                r / (1.0 - gamma)
            } else {
                c
            }
        }
    };
    ExtendedCost::finite(value)
}

/// Maximum one-step fixed-point violation of the chosen solution over the
/// sample radii, under the operator that matches the variant: the plain
/// `min{c, r + J(γr)}` for the unperturbed solutions, and the
/// appropriately perturbed operator for the `δ`-variants.
pub fn stopping_bellman_residual(
    params: &StoppingParams,
    kind: &StoppingSolutionKind,
    sample_radii: &[f64],
) -> f64 {
    let mut worst = 0.0_f64;
    for &r in sample_radii {
        assert!(r > 0.0, "residual samples must be positive radii");
        let j_here = stopping_value(params, kind, r).as_f64();
        let j_next = stopping_value(params, kind, params.gamma * r).as_f64();
        let (stop, go) = match kind {
            StoppingSolutionKind::JHatPDelta(delta) => {
                (params.c + delta * r, r + delta * r + j_next)
            }
            StoppingSolutionKind::JHatPPlusDelta(delta) => (params.c + delta, r + delta + j_next),
            _ => (params.c, r + j_next),
        };
        worst = worst.max((j_here - stop.min(go)).abs());
    }
    worst
}

/// Log-spaced radii in `[r_min, r_max]`, endpoints included.
pub fn log_spaced_radii(r_min: f64, r_max: f64, samples: usize) -> Vec<f64> {
    assert!(r_min > 0.0 && r_max > r_min && samples >= 2);
    let (lo, hi) = (r_min.ln(), r_max.ln());
    (0..samples)
        .map(|i| (lo + (hi - lo) * i as f64 / (samples - 1) as f64).exp())
        .collect()
}

/// Grid radii `r_max · γ^k` for the discretization levels.
pub fn stopping_grid_radii(params: &StoppingParams, r_max: f64, n_levels: usize) -> Vec<f64> {
    (0..n_levels).map(|k| r_max * params.gamma.powi(k as i32)).collect()
}

/// Finite discretization of the stopping problem on the grid
/// `r_max·γ^k, k = 0..n_levels`, plus the destination.
///
/// Stopping moves to the destination at cost `c`; continuing descends one
/// level at cost `r_k`. At the deepest level, continuing goes straight to
/// the destination at the exact tail cost `r/(1−γ)` of continuing forever,
/// so the grid problem's smallest solution agrees with the continuous one
/// exactly at grid radii. The closure makes *every* policy terminating,
/// which forces a unique solution: the largest solution of the continuous
/// problem (`c` everywhere off the origin) has no counterpart on the grid.
pub fn build_stopping_discretization(
    params: &StoppingParams,
    r_max: f64,
    n_levels: usize,
) -> Result<FiniteProblem, InstanceError> {
    if n_levels < 2 {
        return Err(InstanceError::TooFewLevels(n_levels));
    }
    let t = n_levels;
    let radii = stopping_grid_radii(params, r_max, n_levels);
    let mut controls = Vec::with_capacity(n_levels + 1);
    let mut next = Vec::with_capacity(n_levels + 1);
    let mut cost = Vec::with_capacity(n_levels + 1);
    for (k, &r) in radii.iter().enumerate() {
        controls.push(vec!["stop".into(), "continue".into()]);
        if k + 1 < n_levels {
            next.push(vec![t, k + 1]);
            cost.push(vec![Finite(params.c), Finite(r)]);
        } else {
            next.push(vec![t, t]);
            cost.push(vec![Finite(params.c), Finite(r / (1.0 - params.gamma))]);
        }
    }
    controls.push(vec!["stay".into()]);
    next.push(vec![t]);
    cost.push(vec![Finite(0.0)]);
    Ok(FiniteProblem::new(ProblemSpec {
        n_states: n_levels + 1,
        destination: t,
        controls,
        next,
        cost,
        forcing: None,
    })
    .expect("discretization is valid by construction"))
}

/// The two-state shortest-path instance on which policy iteration's limit
/// depends on tie-breaking. States `{0, 1}` with destination `0`; control
/// 0 ("move") sends any state to 0, control 1 ("stay") keeps it. Moving
/// from state 1 costs 1; everything else is free. Staying forever at state
/// 1 is optimal (cost 0) but never reaches the destination; moving is the
/// only stable choice, at cost 1.
pub fn build_spath_counterexample() -> FiniteProblem {
    FiniteProblem::new(ProblemSpec {
        n_states: 2,
        destination: 0,
        controls: vec![vec!["move".into(), "stay".into()], vec!["move".into(), "stay".into()]],
        next: vec![vec![0, 0], vec![0, 1]],
        cost: vec![vec![Finite(0.0), Finite(0.0)], vec![Finite(1.0), Finite(0.0)]],
        forcing: None,
    })
    .expect("counterexample is valid by construction")
}

/// The optimal but unstable policy of the counterexample: stay everywhere.
pub fn spath_stay_policy() -> StationaryPolicy {
    StationaryPolicy::from_raw(vec![1, 1])
}

/// The unique stable policy of the counterexample: move to the destination.
pub fn spath_exit_policy() -> StationaryPolicy {
    StationaryPolicy::from_raw(vec![0, 0])
}

/// Seeded random instance. State 0 is the destination (single free
/// self-loop). Stage costs are dyadic multiples of 1/8 in `[1, 4]`, so all
/// path sums are exact in floating point and bitwise cross-checks between
/// solvers and oracles are meaningful. With probability
/// `zero_cost_cycle_bias` an extra zero-cost cycle is wired through two or
/// three non-destination states, which separates the unrestricted optimum
/// from the terminating one on those states.
pub fn build_random_problem(
    seed: u64,
    n_states: usize,
    max_controls: usize,
    zero_cost_cycle_bias: f64,
) -> FiniteProblem {
    assert!(n_states >= 2, "random instance needs at least 2 states");
    assert!(max_controls >= 1);
    assert!((0.0..=1.0).contains(&zero_cost_cycle_bias));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut controls: Vec<Vec<serde_json::Value>> = Vec::with_capacity(n_states);
    let mut next: Vec<Vec<usize>> = Vec::with_capacity(n_states);
    let mut cost: Vec<Vec<ExtendedCost>> = Vec::with_capacity(n_states);
    controls.push(vec!["stay".into()]);
    next.push(vec![0]);
    cost.push(vec![Finite(0.0)]);
    for _ in 1..n_states {
        let m = rng.gen_range(1..=max_controls);
        let mut row_next = Vec::with_capacity(m);
        let mut row_cost = Vec::with_capacity(m);
        let mut row_labels = Vec::with_capacity(m);
        for u in 0..m {
            row_labels.push(format!("u{u}").into());
            row_next.push(rng.gen_range(0..n_states));
            row_cost.push(Finite(rng.gen_range(8..=32) as f64 / 8.0));
        }
        controls.push(row_labels);
        next.push(row_next);
        cost.push(row_cost);
    }

    if zero_cost_cycle_bias > 0.0 && rng.gen::<f64>() < zero_cost_cycle_bias {
        // One non-destination state degenerates to a free self-loop.
        let max_len = 3.min(n_states - 1);
        let len = if max_len < 2 { 1 } else { rng.gen_range(2..=max_len) };
        let mut members: Vec<usize> = (1..n_states).collect();
        for i in 0..len {
            let j = rng.gen_range(i..members.len());
            members.swap(i, j);
        }
        members.truncate(len);
        for i in 0..len {
            let from = members[i];
            let to = members[(i + 1) % len];
            controls[from].push("cycle".into());
            next[from].push(to);
            cost[from].push(Finite(0.0));
        }
    }

    FiniteProblem::new(ProblemSpec { n_states, destination: 0, controls, next, cost, forcing: None })
        .expect("generated instance is valid by construction")
}

/// Scalar linear-quadratic instance `x' = γx + u`, stage cost `qx² + ru²`,
/// optional discount.
pub fn build_lq_scalar(gamma: f64, q: f64, r: f64, alpha: f64) -> Result<LqProblem, RiccatiError> {
    LqProblem::new(Mat::scalar(gamma), Mat::scalar(1.0), Mat::scalar(q), Mat::scalar(r), alpha)
}
