//! The linear-quadratic specialization.
//!
//! For a linear system `x' = Ax + Bu` with stage cost `x'Qx + u'Ru`
//! (and optional discount `α`), quadratic value functions `x'Px` turn the
//! optimality backup into the Riccati map
//!
//! ```text
//! P ← A'(αP − α²PB(αB'PB + R)⁻¹B'P)A + Q + δI
//! ```
//!
//! where `δI` is the excursion-penalty perturbation for the forcing
//! function `‖x‖²`. Without detectability the unperturbed equation can have
//! several positive semidefinite solutions; the largest one is recovered as
//! the `δ ↓ 0` limit of the perturbed solutions, which are unique. Gains
//! are extracted from the first-order optimality condition
//! `(R + αB'PB)L = −αB'PA`, and closed loops are classified by spectral
//! radius with an explicit margin (see [`crate::tolerances`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{Mat, MatrixError};
use crate::solvers::DeltaSchedule;
use crate::tolerances::{
    DEFAULT_MAX_ITER, DIVERGENCE_BOUND, LYAPUNOV_TOL, PD_EIG_MIN, PSD_EIG_FLOOR, STABILITY_MARGIN,
    SYM_TOL,
};

#[derive(Debug, Error, PartialEq)]
pub enum RiccatiError {
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("{which} must be symmetric (drift {drift:e} exceeds tolerance)")]
    NotSymmetric { which: &'static str, drift: f64 },
    #[error("{which} must be positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { which: &'static str, min_eig: f64 },
    #[error("R must be positive definite (min eigenvalue {min_eig:e})")]
    NotPd { min_eig: f64 },
    #[error("discount must lie in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error("inner matrix R + αB'PB is singular")]
    SingularInnerMatrix,
    #[error("fixed-point iteration hit the iteration cap")]
    IterationCap,
    #[error("fixed-point iteration diverged at perturbation weight {delta}")]
    Divergence { delta: f64 },
}

impl From<MatrixError> for RiccatiError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::Singular => RiccatiError::SingularInnerMatrix,
            other => RiccatiError::Shape(other.to_string()),
        }
    }
}

/// Raw JSON form: `{ "A": [[..]], "B": [[..]], "Q": [[..]], "R": [[..]],
/// "alpha": number? }` (`alpha` defaults to 1, undiscounted).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LqSpec {
    #[serde(rename = "A")]
    pub a: Mat,
    #[serde(rename = "B")]
    pub b: Mat,
    #[serde(rename = "Q")]
    pub q: Mat,
    #[serde(rename = "R")]
    pub r: Mat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// A validated linear-quadratic instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LqProblem {
    a: Mat,
    b: Mat,
    q: Mat,
    r: Mat,
    alpha: f64,
}

impl LqProblem {
    pub fn new(a: Mat, b: Mat, q: Mat, r: Mat, alpha: f64) -> Result<Self, RiccatiError> {
        let n = a.rows();
        let m = b.cols();
        if !a.is_square() {
            return Err(RiccatiError::Shape("A must be square".into()));
        }
        if b.rows() != n {
            return Err(RiccatiError::Shape(format!("B must have {n} rows")));
        }
        if q.rows() != n || q.cols() != n {
            return Err(RiccatiError::Shape(format!("Q must be {n}x{n}")));
        }
        if r.rows() != m || r.cols() != m {
            return Err(RiccatiError::Shape(format!("R must be {m}x{m}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(RiccatiError::BadAlpha(alpha));
        }
        check_symmetric("Q", &q)?;
        check_symmetric("R", &r)?;
        let q_min = q.min_sym_eigenvalue();
        if q_min < PSD_EIG_FLOOR {
            return Err(RiccatiError::NotPsd { which: "Q", min_eig: q_min });
        }
        let r_min = r.min_sym_eigenvalue();
        if r_min < PD_EIG_MIN {
            return Err(RiccatiError::NotPd { min_eig: r_min });
        }
        Ok(LqProblem { a, b, q, r, alpha })
    }

    pub fn from_spec(spec: LqSpec) -> Result<Self, RiccatiError> {
        LqProblem::new(spec.a, spec.b, spec.q, spec.r, spec.alpha.unwrap_or(1.0))
    }

    pub fn to_spec(&self) -> LqSpec {
        LqSpec {
            a: self.a.clone(),
            b: self.b.clone(),
            q: self.q.clone(),
            r: self.r.clone(),
            alpha: if self.alpha == 1.0 { None } else { Some(self.alpha) },
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub fn r(&self) -> &Mat {
        &self.r
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

fn check_symmetric(which: &'static str, m: &Mat) -> Result<(), RiccatiError> {
    let drift = m.asymmetry();
    if drift > SYM_TOL {
        return Err(RiccatiError::NotSymmetric { which, drift });
    }
    Ok(())
}

/// Whether the extracted closed loop contracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stabilizing,
    NonStabilizing,
}

/// A fixed point of the Riccati map together with its extracted gain and
/// closed-loop diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiccatiSolution {
    #[serde(rename = "P")]
    pub p: Mat,
    pub gain: Mat,
    pub closed_loop_spectral_radius: f64,
    pub classification: Stability,
    /// `max |P − map(P)|` at the weight this solution was solved for.
    pub fixed_point_residual: f64,
    /// `max |(R + αB'PB)L + αB'PA|`.
    pub gain_residual: f64,
}

/// One application of the (discounted, `δ`-perturbed) Riccati map,
/// symmetrized to suppress rounding drift.
pub fn riccati_map(p: &Mat, problem: &LqProblem, delta: f64) -> Result<Mat, RiccatiError> {
    let alpha = problem.alpha;
    let bt_p = problem.b.transpose().matmul(p);
    let s = bt_p.matmul(&problem.b).scale(alpha).add(&problem.r);
    let y = s.solve(&bt_p)?;
    let pb = p.matmul(&problem.b);
    let inner = p.scale(alpha).sub(&pb.matmul(&y).scale(alpha * alpha));
    let mut out = problem.a.transpose().matmul(&inner).matmul(&problem.a).add(&problem.q);
    if delta != 0.0 {
        for i in 0..out.rows() {
            out[(i, i)] += delta;
        }
    }
    Ok(out.symmetrized())
}

fn extract_solution(problem: &LqProblem, p: Mat, delta: f64) -> Result<RiccatiSolution, RiccatiError> {
    let alpha = problem.alpha;
    let bt_p = problem.b.transpose().matmul(&p);
    let s = bt_p.matmul(&problem.b).scale(alpha).add(&problem.r);
    let rhs = bt_p.matmul(&problem.a).scale(alpha);
    let gain = s.solve(&rhs)?.scale(-1.0);
    let gain_residual = s.matmul(&gain).add(&rhs).max_abs();
    let closed_loop = problem.a.add(&problem.b.matmul(&gain));
    let radius = closed_loop.spectral_radius();
    let classification = if radius <= 1.0 - STABILITY_MARGIN {
        Stability::Stabilizing
    } else {
        Stability::NonStabilizing
    };
    let fixed_point_residual = p.sub(&riccati_map(&p, problem, delta)?).max_abs();
    Ok(RiccatiSolution {
        p,
        gain,
        closed_loop_spectral_radius: radius,
        classification,
        fixed_point_residual,
        gain_residual,
    })
}

fn iterate_to_fixed_point(
    problem: &LqProblem,
    start: Mat,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Mat, usize), RiccatiError> {
    let mut p = start;
    for k in 0..max_iter {
        let next = riccati_map(&p, problem, delta)?;
        if next.max_abs() > DIVERGENCE_BOUND {
            return Err(RiccatiError::Divergence { delta });
        }
        let change = next.sub(&p).max_abs();
        p = next;
        if change <= tol {
            return Ok((p, k + 1));
        }
    }
    Err(RiccatiError::IterationCap)
}

fn check_psd_start(p0: &Mat, n: usize) -> Result<(), RiccatiError> {
    if p0.rows() != n || p0.cols() != n {
        return Err(RiccatiError::Shape(format!("P0 must be {n}x{n}")));
    }
    check_symmetric("P0", p0)?;
    let min_eig = p0.min_sym_eigenvalue();
    if min_eig < PSD_EIG_FLOOR {
        return Err(RiccatiError::NotPsd { which: "P0", min_eig });
    }
    Ok(())
}

/// Iterates the `δ`-perturbed Riccati map from a symmetric PSD start until
/// the entrywise change drops to `tol`, then extracts gain and closed-loop
/// diagnostics. Different starts can land on different fixed points; that
/// is the point.
pub fn solve_riccati_fixed_point(
    problem: &LqProblem,
    p0: &Mat,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiSolution, RiccatiError> {
    check_psd_start(p0, problem.state_dim())?;
    let (p, _) = iterate_to_fixed_point(problem, p0.clone(), delta, tol, max_iter)?;
    extract_solution(problem, p, delta)
}

/// The iterate sequence (including the start) of the `δ`-perturbed Riccati
/// map, for staircase plots.
pub fn riccati_iterates(
    problem: &LqProblem,
    p0: &Mat,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<Mat>, RiccatiError> {
    check_psd_start(p0, problem.state_dim())?;
    let mut iterates = vec![p0.clone()];
    let mut p = p0.clone();
    for _ in 0..max_iter {
        let next = riccati_map(&p, problem, delta)?;
        if next.max_abs() > DIVERGENCE_BOUND {
            return Err(RiccatiError::Divergence { delta });
        }
        let change = next.sub(&p).max_abs();
        p = next;
        iterates.push(p.clone());
        if change <= tol {
            return Ok(iterates);
        }
    }
    Err(RiccatiError::IterationCap)
}

/// One solved rung of the `δ`-homotopy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaStep {
    pub delta: f64,
    #[serde(rename = "P")]
    pub p: Mat,
    pub iterations: usize,
}

/// Result of driving the perturbation to zero: the per-`δ` solutions (PSD
/// order nonincreasing as `δ` shrinks) and the extracted limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaHomotopy {
    pub steps: Vec<DeltaStep>,
    pub solution: RiccatiSolution,
}

/// Solves the `δ_k`-perturbed equation for each weight in the schedule,
/// warm-starting each solve from the previous solution, and returns the
/// limit with its residual under the *unperturbed* map.
///
/// Divergence of a rung (iterates crossing the magnitude bound) reports the
/// offending weight; it is the operational signal that no stabilizing
/// policy exists, in which case the perturbed equation has no solution.
pub fn p_hat_via_delta_limit(
    problem: &LqProblem,
    schedule: &DeltaSchedule,
    tol: f64,
) -> Result<DeltaHomotopy, RiccatiError> {
    let mut warm = Mat::identity(problem.state_dim());
    let mut steps = Vec::with_capacity(schedule.length);
    for delta in schedule.deltas() {
        let (p, iterations) = iterate_to_fixed_point(problem, warm, delta, tol, DEFAULT_MAX_ITER)?;
        steps.push(DeltaStep { delta, p: p.clone(), iterations });
        warm = p;
    }
    let solution = extract_solution(problem, warm, 0.0)?;
    Ok(DeltaHomotopy { steps, solution })
}

/// Exact quadratic cost of the linear policy `u = Lx`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearPolicyCost {
    /// The unique PSD solution of
    /// `P = α(A+BL)'P(A+BL) + Q + L'RL`.
    Converged(Mat),
    /// The closed loop does not contract, so the cost is unbounded along
    /// some direction.
    Divergent,
}

/// Evaluates `u = Lx` by fixed-point iteration on the policy's quadratic
/// cost identity; reports [`LinearPolicyCost::Divergent`] when the closed
/// loop's (discount-weighted) spectral radius is not inside the stability
/// margin.
pub fn linear_policy_cost(problem: &LqProblem, l: &Mat) -> Result<LinearPolicyCost, RiccatiError> {
    let n = problem.state_dim();
    let m = problem.input_dim();
    if l.rows() != m || l.cols() != n {
        return Err(RiccatiError::Shape(format!("gain must be {m}x{n}")));
    }
    let closed = problem.a.add(&problem.b.matmul(l));
    if problem.alpha.sqrt() * closed.spectral_radius() > 1.0 - STABILITY_MARGIN {
        return Ok(LinearPolicyCost::Divergent);
    }
    let stage = problem.q.add(&l.transpose().matmul(&problem.r).matmul(l));
    let closed_t = closed.transpose();
    let mut p = Mat::zeros(n, n);
    for _ in 0..DEFAULT_MAX_ITER {
        let next = closed_t.matmul(&p).matmul(&closed).scale(problem.alpha).add(&stage).symmetrized();
        let change = next.sub(&p).max_abs();
        p = next;
        if change <= LYAPUNOV_TOL {
            return Ok(LinearPolicyCost::Converged(p));
        }
    }
    Err(RiccatiError::IterationCap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::build_lq_scalar;

    fn scalar_gain_two() -> LqProblem {
        build_lq_scalar(2.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn scalar_map_values() {
        let problem = scalar_gain_two();
        let at = |p: f64| riccati_map(&Mat::scalar(p), &problem, 0.0).unwrap()[(0, 0)];
        assert_eq!(at(1.0), 2.0); // γ²·1/(1+1)
        assert_eq!(at(0.0), 0.0); // collapses to Q
        assert_eq!(at(3.0), 3.0); // the nonzero fixed point γ²−1
    }

    #[test]
    fn perturbed_map_adds_delta_on_diagonal() {
        let problem = scalar_gain_two();
        let v = riccati_map(&Mat::scalar(0.0), &problem, 0.25).unwrap()[(0, 0)];
        assert_eq!(v, 0.25);
    }

    #[test]
    fn two_fixed_points_from_two_starts() {
        let problem = scalar_gain_two();
        let high = solve_riccati_fixed_point(&problem, &Mat::scalar(1.0), 0.0, 1e-12, 200).unwrap();
        assert!((high.p[(0, 0)] - 3.0).abs() < 1e-9);
        assert!((high.gain[(0, 0)] + 1.5).abs() < 1e-9);
        assert!((high.closed_loop_spectral_radius - 0.5).abs() < 1e-9);
        assert_eq!(high.classification, Stability::Stabilizing);

        let low = solve_riccati_fixed_point(&problem, &Mat::scalar(0.0), 0.0, 1e-12, 200).unwrap();
        assert_eq!(low.p[(0, 0)], 0.0); // stays exactly at zero
        assert_eq!(low.gain[(0, 0)], 0.0);
        assert!((low.closed_loop_spectral_radius - 2.0).abs() < 1e-9);
        assert_eq!(low.classification, Stability::NonStabilizing);
    }

    #[test]
    fn discounted_fixed_point() {
        let alpha = 0.9;
        let problem = build_lq_scalar(2.0, 0.0, 1.0, alpha).unwrap();
        let expected = (alpha * 4.0 - 1.0) / alpha;
        let residual =
            riccati_map(&Mat::scalar(expected), &problem, 0.0).unwrap()[(0, 0)] - expected;
        assert!(residual.abs() <= 1e-10);
        let sol = solve_riccati_fixed_point(&problem, &Mat::scalar(1.0), 0.0, 1e-13, 500).unwrap();
        assert!((sol.p[(0, 0)] - expected).abs() < 1e-9);
    }

    #[test]
    fn homotopy_reaches_largest_solution() {
        let problem = scalar_gain_two();
        let schedule = DeltaSchedule::until_below(0.1, 0.1, 1e-11).unwrap();
        let homotopy = p_hat_via_delta_limit(&problem, &schedule, 1e-12).unwrap();
        assert!((homotopy.solution.p[(0, 0)] - 3.0).abs() < 1e-8);
        assert!(homotopy.solution.fixed_point_residual <= 1e-8);
        // P_δ decreases as δ shrinks.
        for pair in homotopy.steps.windows(2) {
            assert!(pair[1].p[(0, 0)] <= pair[0].p[(0, 0)] + 1e-12);
        }
    }

    #[test]
    fn non_stabilizable_pair_diverges() {
        let problem = LqProblem::new(
            Mat::scalar(2.0),
            Mat::scalar(0.0),
            Mat::scalar(1.0),
            Mat::scalar(1.0),
            1.0,
        )
        .unwrap();
        let schedule = DeltaSchedule::new(0.1, 0.1, 6).unwrap();
        let err = p_hat_via_delta_limit(&problem, &schedule, 1e-10).unwrap_err();
        assert_eq!(err, RiccatiError::Divergence { delta: 0.1 });
    }

    #[test]
    fn policy_cost_of_extracted_gain_reproduces_p() {
        let problem = scalar_gain_two();
        let l = Mat::scalar(-1.5);
        match linear_policy_cost(&problem, &l).unwrap() {
            LinearPolicyCost::Converged(p) => assert!((p[(0, 0)] - 3.0).abs() < 1e-10),
            LinearPolicyCost::Divergent => panic!("gain is stabilizing"),
        }
    }

    #[test]
    fn policy_cost_edge_cases() {
        // Stable A, zero gain, zero state cost: free.
        let stable =
            LqProblem::new(Mat::scalar(0.5), Mat::scalar(1.0), Mat::scalar(0.0), Mat::scalar(1.0), 1.0)
                .unwrap();
        assert_eq!(
            linear_policy_cost(&stable, &Mat::scalar(0.0)).unwrap(),
            LinearPolicyCost::Converged(Mat::scalar(0.0))
        );
        // Non-contracting closed loop.
        let problem = scalar_gain_two();
        assert_eq!(linear_policy_cost(&problem, &Mat::scalar(-1.0)).unwrap(), LinearPolicyCost::Divergent);
    }

    #[test]
    fn detectable_case_has_unique_psd_fixed_point() {
        let problem = build_lq_scalar(2.0, 1.0, 1.0, 1.0).unwrap();
        let from_zero = solve_riccati_fixed_point(&problem, &Mat::scalar(0.0), 0.0, 1e-13, 10_000).unwrap();
        let from_one = solve_riccati_fixed_point(&problem, &Mat::scalar(1.0), 0.0, 1e-13, 10_000).unwrap();
        assert!((from_zero.p[(0, 0)] - from_one.p[(0, 0)]).abs() < 1e-9);
        assert_eq!(from_zero.classification, Stability::Stabilizing);
    }

    #[test]
    fn validation_rejects_bad_instances() {
        let asym = Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let eye = Mat::identity(2);
        let b = Mat::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        assert!(matches!(
            LqProblem::new(eye.clone(), b.clone(), asym, Mat::scalar(1.0), 1.0),
            Err(RiccatiError::NotSymmetric { which: "Q", .. })
        ));
        assert!(matches!(
            LqProblem::new(eye.clone(), b.clone(), eye.clone(), Mat::scalar(0.0), 1.0),
            Err(RiccatiError::NotPd { .. })
        ));
        assert!(matches!(
            LqProblem::new(eye.clone(), b, eye.clone(), Mat::scalar(1.0), 1.5),
            Err(RiccatiError::BadAlpha(_))
        ));
    }

    #[test]
    fn lq_spec_round_trip() {
        let problem = build_lq_scalar(2.0, 0.0, 1.0, 0.9).unwrap();
        let json = serde_json::to_string(&problem.to_spec()).unwrap();
        let back = LqProblem::from_spec(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, problem);
    }
}
