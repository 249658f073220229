//! Pinned numerical thresholds, in one place.
//!
//! Every classification this crate makes (converged / stabilizing /
//! positive semidefinite / diverging) is a comparison against one of these
//! constants, so reruns reproduce the same verdicts.

/// Default sup-norm stopping threshold for iterative fixed-point schemes.
pub const DEFAULT_VI_TOL: f64 = 1e-10;

/// Default iteration budget for iterative schemes.
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Default policy-count ceiling for the enumeration oracle.
pub const ORACLE_ENUM_CAP: u64 = 1_000_000;

/// Symmetry drift allowed in matrices that are symmetric by construction
/// (`max |M - M'|` entrywise).
pub const SYM_TOL: f64 = 1e-9;

/// Eigenvalue floor for accepting a matrix as positive semidefinite;
/// slightly negative to absorb rounding in the eigenvalue computation.
pub const PSD_EIG_FLOOR: f64 = -1e-8;

/// Minimum eigenvalue for accepting a matrix as positive definite.
pub const PD_EIG_MIN: f64 = 1e-9;

/// A closed loop counts as stabilizing iff its spectral radius is at most
/// `1 - STABILITY_MARGIN`; radii inside the margin are classified as
/// non-stabilizing rather than guessed.
pub const STABILITY_MARGIN: f64 = 1e-8;

/// Magnitude at which a fixed-point iteration on matrices is declared
/// divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Stopping threshold for the policy-cost (Lyapunov-identity) iteration.
pub const LYAPUNOV_TOL: f64 = 1e-12;

/// Relative tolerance on the base-`γ` logarithm when testing membership of
/// a radius in a geometric orbit `{γ^k · x0}`.
pub const ORBIT_LOG_REL_TOL: f64 = 1e-12;
