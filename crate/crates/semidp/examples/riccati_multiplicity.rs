//! Two nonnegative fixed points of a scalar Riccati equation.
//!
//! For `x' = γx + u` with `γ > 1`, cost `u²` (no state penalty), the
//! Riccati equation `P = γ²P/(P+1)` has the solutions `P = 0` (the
//! unrestricted optimum: do nothing, states are free) and `P = γ² − 1`
//! (the optimum over stabilizing linear policies). Iteration selects by
//! start: any positive start climbs to the large root, zero stays at zero.
//!
//! ```bash
//! cargo run -p semidp --example riccati_multiplicity
//! ```

use semidp::instances::build_lq_scalar;
use semidp::matrix::Mat;
use semidp::riccati::{riccati_iterates, solve_riccati_fixed_point};

fn main() {
    let gamma = 2.0;
    let problem = build_lq_scalar(gamma, 0.0, 1.0, 1.0).unwrap();

    println!("iterate staircase from P0 = 0.1 (climbs to γ² − 1 = {}):", gamma * gamma - 1.0);
    let iterates = riccati_iterates(&problem, &Mat::scalar(0.1), 0.0, 1e-12, 200).unwrap();
    for (k, p) in iterates.iter().enumerate().take(10) {
        println!("  P_{k:<2} = {:.12}", p[(0, 0)]);
    }
    println!("  ...  P_{} = {:.12}", iterates.len() - 1, iterates.last().unwrap()[(0, 0)]);

    for p0 in [1.0, 0.0] {
        let sol = solve_riccati_fixed_point(&problem, &Mat::scalar(p0), 0.0, 1e-12, 200).unwrap();
        println!(
            "\nfrom P0 = {p0}: P = {:.9}, gain = {:.4}, closed loop = {:.4} ({:?})",
            sol.p[(0, 0)],
            sol.gain[(0, 0)],
            sol.closed_loop_spectral_radius,
            sol.classification,
        );
    }

    // The same two-solution picture survives discounting.
    let alpha = 0.9;
    let discounted = build_lq_scalar(gamma, 0.0, 1.0, alpha).unwrap();
    let expected = (alpha * gamma * gamma - 1.0) / alpha;
    let sol = solve_riccati_fixed_point(&discounted, &Mat::scalar(1.0), 0.0, 1e-13, 500).unwrap();
    println!(
        "\ndiscounted (α = {alpha}): iteration from P0 = 1 gives P = {:.9} (closed form {expected:.9})",
        sol.p[(0, 0)]
    );
}
