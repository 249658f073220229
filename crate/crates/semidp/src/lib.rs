//! Deterministic infinite-horizon optimal control with nonnegative stage
//! costs and a cost-free absorbing destination.
//!
//! In this problem class the optimality (fixed-point) equation
//! `J(x) = min_u { g(x,u) + J(f(x,u)) }` can have *many* solutions, and the
//! standard algorithms are only reliable relative to where they start.
//! Three solutions are distinguished:
//!
//! * `J*` — the optimum over all policies; the smallest solution,
//! * `Ĵ_p` — the optimum over policies that are stable for a forcing
//!   function `p` (finite cost *and* finite accumulated forcing),
//! * `J⁺` — the optimum over policies reaching the destination in finitely
//!   many steps; the largest solution. On finite problems `Ĵ_p = J⁺` for
//!   every positive forcing function.
//!
//! The crate provides exact finite-problem machinery ([`model`],
//! [`operators`]), the solver families whose limits select among these
//! solutions ([`solvers`]), brute-force certification by policy enumeration
//! ([`oracle`]), the linear-quadratic specialization where the same
//! multiplicity appears in the Riccati equation ([`riccati`]), closed-form
//! canonical instances ([`instances`]), a randomized invariant battery
//! ([`suite`]), and a command-line front end ([`cli`]).
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run -p semidp --example pi_counterexample
//! cargo run -p semidp --example riccati_multiplicity
//! cargo run -p semidp --example minimum_energy_homotopy
//! cargo run -p semidp --example stopping_solutions
//! cargo run -p semidp --example discretization_gap
//! cargo run -p semidp --example random_certification
//! ```

pub mod cli;
pub mod cost;
pub mod instances;
pub mod matrix;
pub mod model;
pub mod operators;
pub mod oracle;
pub mod riccati;
pub mod solvers;
pub mod suite;
pub mod tolerances;

pub use cost::ExtendedCost;
pub use model::{
    evaluate_policy, is_p_stable_from, perturbed_problem, trajectory, FiniteProblem,
    ForcingFunction, ProblemSpec, StationaryPolicy, TrajectoryOutcome, TrajectoryReport,
    ValidationError, ValueFunction,
};
pub use operators::{bellman_operator, bellman_residual, greedy_policy, policy_backup, TieRule};
pub use solvers::{
    compute_j_plus, compute_j_star_vi, j_hat_via_delta_limit, optimistic_policy_iteration,
    perturbed_policy_iteration, policy_iteration, value_iteration, DeltaSchedule, MSchedule, PiTie,
    SolveTrace, SolverError, Termination,
};
