//! What a grid discretization keeps — and what it loses.
//!
//! Discretizing the stopping problem onto the grid `r_max·γ^k` (with the
//! exact geometric tail cost closing the deepest level) makes every policy
//! terminating, so the grid problem's one-step equation has a *unique*
//! solution. That solution tracks the continuous problem's smallest
//! solution exactly at grid radii, while the largest solution — the
//! constant stop cost — has no grid counterpart at all. Approximating it
//! requires discretizing a perturbed problem instead.
//!
//! ```bash
//! cargo run -p semidp --example discretization_gap
//! ```

use semidp::instances::{
    build_stopping_discretization, stopping_grid_radii, stopping_value, StoppingParams,
    StoppingSolutionKind,
};
use semidp::model::perturbed_problem;
use semidp::model::ForcingFunction;
use semidp::solvers::{compute_j_plus, compute_j_star_vi};

fn main() {
    let params = StoppingParams::new(1.0, 0.5).unwrap();
    let problem = build_stopping_discretization(&params, 2.0, 20).unwrap();
    let radii = stopping_grid_radii(&params, 2.0, 20);

    let from_zero = compute_j_star_vi(&problem, 1e-12, 10_000).value;
    let from_inf = compute_j_plus(&problem);
    println!(
        "uniqueness: value iteration from below and from above differ by {}\n",
        from_zero.sup_gap(&from_inf)
    );

    println!("{:<14}{:>16}{:>20}{:>18}", "grid radius", "grid solution", "continuous smallest", "continuous largest");
    for (k, &r) in radii.iter().enumerate().step_by(2) {
        println!(
            "{r:<14.8}{:>16.10}{:>20.10}{:>18.10}",
            from_zero.get(k).as_f64(),
            stopping_value(&params, &StoppingSolutionKind::JStar, r).as_f64(),
            params.c,
        );
    }
    println!("\nbelow the stop threshold the grid solution sits far under the stop cost:");
    let worst = radii
        .iter()
        .enumerate()
        .filter(|(_, &r)| r < params.stop_threshold())
        .map(|(k, _)| params.c - from_zero.get(k).as_f64())
        .fold(f64::INFINITY, f64::min);
    println!("  min gap to the largest solution at interior radii = {worst:.6}");

    // A perturbed discretization recovers the largest solution instead.
    let p = ForcingFunction::p_plus(&problem);
    let delta = 1e-6;
    let shifted = perturbed_problem(&problem, &p, delta).unwrap();
    let perturbed = compute_j_plus(&shifted);
    println!("\ndiscretizing the {delta:e}-perturbed problem instead:");
    for (k, &r) in radii.iter().enumerate().filter(|(_, &r)| r < 0.1).take(3) {
        println!(
            "  r = {r:<12.8} perturbed-grid value = {:.8} (stop cost {})",
            perturbed.get(k).as_f64(),
            params.c
        );
    }
    println!("  (stopping immediately is optimal once every free orbit is penalized)");
}
