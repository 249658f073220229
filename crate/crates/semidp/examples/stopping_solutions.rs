//! The solution zoo of the radial stopping problem.
//!
//! At radius `r > 0`: stop at cost `c`, or contract to `γr` at cost `r`.
//! The one-step equation `J(r) = min{c, r + J(γr)}` has a continuum of
//! solutions between the smallest (`min{c, r/(1−γ)}`) and the largest
//! (`c` off the origin), including "middle" solutions supported on a
//! single geometric orbit. All are evaluated here in closed form and
//! checked against their one-step equations.
//!
//! ```bash
//! cargo run -p semidp --example stopping_solutions
//! ```

use semidp::instances::{
    log_spaced_radii, stopping_bellman_residual, stopping_value, StoppingParams,
    StoppingSolutionKind,
};

fn main() {
    let params = StoppingParams::new(1.0, 0.5).unwrap();
    let x0 = 0.3;
    let kinds = [
        ("smallest (J*)", StoppingSolutionKind::JStar),
        ("largest (J+)", StoppingSolutionKind::JPlus),
        ("perturbed, p=r, d=0.1", StoppingSolutionKind::JHatPDelta(0.1)),
        ("perturbed, p=1, d=0.1", StoppingSolutionKind::JHatPPlusDelta(0.1)),
        ("middle, anchor 0.3", StoppingSolutionKind::Middle(x0)),
    ];

    println!(
        "stop threshold (1-γ)c = {}: stopping is optimal outside, continuing inside\n",
        params.stop_threshold()
    );

    print!("{:<12}", "radius");
    for (name, _) in &kinds {
        print!("{name:>22}");
    }
    println!();
    // The orbit points 0.3·γ^k are where the middle solution departs from
    // the stop cost.
    let mut radii = vec![2.0, 0.6, 0.45, 0.3, 0.2, 0.15, 0.075, 0.01];
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for &r in &radii {
        print!("{r:<12}");
        for (_, kind) in &kinds {
            print!("{:>22}", format!("{}", stopping_value(&params, kind, r)));
        }
        println!();
    }

    println!("\none-step residuals over 1000 log-spaced radii in [1e-6, 10]:");
    let grid = log_spaced_radii(1e-6, 10.0, 1000);
    for (name, kind) in &kinds {
        println!("  {:<24} {:.3e}", name, stopping_bellman_residual(&params, kind, &grid));
    }

    println!("\nperturbed optimum vs smallest solution as the weight vanishes:");
    for k in 1..=5 {
        let delta = 10f64.powi(-k);
        let max_gap = grid
            .iter()
            .map(|&r| {
                stopping_value(&params, &StoppingSolutionKind::JHatPDelta(delta), r).as_f64()
                    - stopping_value(&params, &StoppingSolutionKind::JStar, r).as_f64()
            })
            .fold(0.0_f64, f64::max);
        println!("  delta = {delta:<7.0e} max gap = {max_gap:.3e}");
    }
}
