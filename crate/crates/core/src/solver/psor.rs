//! Projected successive over-relaxation for `w >= 0, Kw + f >= 0, w (Kw + f) = 0`.

use super::operator::DiscreteOperator;

/// Fixed relaxation factor.
pub const OMEGA: f64 = 1.5;

/// Sweeps between stopping-rule evaluations.
const CHECK_EVERY: usize = 10;

pub(crate) struct PsorOutcome {
    pub w: Vec<f64>,
    pub sweeps: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Runs lexicographic projected Gauss-Seidel sweeps with over-relaxation until the
/// complementarity residual drops below `target`.
pub(crate) fn solve(op: &DiscreteOperator, mut w: Vec<f64>, target: f64, max_sweeps: usize) -> PsorOutcome {
    let interior = op.interior();
    let diag = op.diag();
    let mut residual = op.complementarity_residual(&w);
    let mut sweeps = 0;
    while residual > target && sweeps < max_sweeps {
        let batch = CHECK_EVERY.min(max_sweeps - sweeps);
        for _ in 0..batch {
            for (i, &a) in interior.iter().enumerate() {
                let r = op.residual_row(i, &w);
                w[a] = (w[a] - OMEGA * r / diag[i]).max(0.0);
            }
        }
        sweeps += batch;
        residual = op.complementarity_residual(&w);
    }
    PsorOutcome {
        converged: residual <= target,
        w,
        sweeps,
        residual,
    }
}
