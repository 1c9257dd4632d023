use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operator::{for_each_edge, DiscreteOperator};
use super::{ObstacleProblemSpec, SolveResult};
use crate::error::Result;
use crate::grid::{distance_sq, ScalarField};

/// Discrete `J(w) = int (a grad w . grad w + 2 f w)`: edge-midpoint quadrature for the
/// gradient term, trapezoid weights for the forcing term. Its gradient with respect
/// to an interior value is exactly `2 h^n (K w + f)_a`.
pub fn energy(w: &ScalarField, spec: &ObstacleProblemSpec) -> f64 {
    energy_of(w.values(), spec)
}

fn energy_of(w: &[f64], spec: &ObstacleProblemSpec) -> f64 {
    let coeffs = spec.coefficients();
    let grid = coeffs.grid();
    let mut grad = 0.0;
    for_each_edge(coeffs, |a, b, c| {
        let d = w[a] - w[b];
        grad += c * d * d;
    });
    let last = grid.nodes_per_axis() - 1;
    let f = coeffs.forcing();
    let mut load = 0.0;
    for (a, &wa) in w.iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        let m = grid.multi_index(a);
        let weight: f64 = (0..grid.dim())
            .map(|k| if m[k] == 0 || m[k] == last { 0.5 } else { 1.0 })
            .product();
        load += weight * 2.0 * f[a] * wa;
    }
    grad + grid.cell_volume() * load
}

/// Weak-form and minimality evidence for a computed solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// Max over hat functions at positivity nodes of
    /// `|int a grad w . grad phi + int f phi| / int phi`.
    pub weak_defect: f64,
    pub inactive_count: usize,
    pub competitors: usize,
    /// `min J(v) - J(w)` over the random feasible competitors `v`.
    pub min_energy_gap: f64,
    pub energy: f64,
}

impl EquivalenceReport {
    pub fn competitors_never_lower(&self, slack: f64) -> bool {
        self.min_energy_gap >= -slack
    }
}

/// Tests the weak equation on the positivity set and probes minimality with
/// seeded random feasible perturbations.
pub fn equivalence_check(result: &SolveResult, spec: &ObstacleProblemSpec, competitors: usize, seed: u64) -> Result<EquivalenceReport> {
    let op = DiscreteOperator::assemble(spec.coefficients(), spec.boundary())?;
    let w = result.w();
    let grid = *spec.grid();
    let mut weak_defect: f64 = 0.0;
    let mut inactive_count = 0;
    for (i, &a) in op.interior().iter().enumerate() {
        if w[a] > 0.0 {
            inactive_count += 1;
            weak_defect = weak_defect.max(op.residual_row(i, w).abs());
        }
    }

    let base = energy_of(w, spec);
    let interior = op.interior();
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(grid.h().powi(2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_gap = f64::INFINITY;
    for _ in 0..competitors {
        // Redraw perturbations that the projection maps back onto w.
        let mut v = w.to_vec();
        for _ in 0..16 {
            let center = grid.coords(interior[rng.gen_range(0..interior.len())]);
            let radius = grid.h() * rng.gen_range(1.0..6.0);
            let amplitude = scale * rng.gen_range(1e-4..1e-1) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            for &a in interior {
                let d2 = distance_sq(&grid.coords(a), &center) / (radius * radius);
                if d2 < 1.0 {
                    v[a] = (w[a] + amplitude * (1.0 - d2)).max(0.0);
                }
            }
            if v != w {
                break;
            }
        }
        min_gap = min_gap.min(energy_of(&v, spec) - base);
    }
    Ok(EquivalenceReport {
        weak_defect,
        inactive_count,
        competitors,
        min_energy_gap: if competitors == 0 { 0.0 } else { min_gap },
        energy: base,
    })
}
