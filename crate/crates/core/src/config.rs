//! Numerical tolerances shared across the crate.

use serde::{Deserialize, Serialize};

/// Every tolerance and iteration cap used by the solvers lives here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Newton refinements applied after the rational Q⁻¹ guess.
    pub q_inv_newton_steps: usize,
    /// Relative bracket width at which the `γ̄` bisection stops.
    pub gamma_bar_rel: f64,
    /// Default relative stopping tolerance for the iterative SNR solvers.
    pub solve_rel: f64,
    /// Bisection tolerance used when bisection serves as the reference.
    pub reference_rel: f64,
    pub ear_max_iter: usize,
    pub fixed_point_max_iter: usize,
    pub bisection_max_iter: usize,
    /// Joint relative-change stopping criterion for majorization-minimization.
    pub mm_rel: f64,
    pub mm_max_rounds: usize,
    /// Dinkelbach stopping criterion `|num − λ·den| ≤ tol·|num|`.
    pub dinkelbach_rel: f64,
    pub dinkelbach_max_iter: usize,
    /// Inner projected-gradient stopping tolerance (scaled variables).
    pub pg_rel: f64,
    pub pg_max_iter: usize,
    /// Bisection tolerance for the true SNR inside exhaustive-search oracles.
    pub oracle_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            q_inv_newton_steps: 2,
            gamma_bar_rel: 1e-15,
            solve_rel: 1e-10,
            reference_rel: 1e-14,
            ear_max_iter: 64,
            fixed_point_max_iter: 200,
            bisection_max_iter: 128,
            mm_rel: 1e-8,
            mm_max_rounds: 1000,
            dinkelbach_rel: 1e-9,
            dinkelbach_max_iter: 50,
            pg_rel: 1e-12,
            pg_max_iter: 5000,
            oracle_rel: 1e-12,
        }
    }
}
