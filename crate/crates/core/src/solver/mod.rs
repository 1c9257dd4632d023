//! Discrete obstacle problem `w >= 0, K w + f >= 0, w (K w + f) = 0` with
//! `K ~ -div(a grad .)`, its energy, and the minimization/weak-form cross-check.

mod active_set;
mod energy;
mod operator;
mod psor;

use serde::{Deserialize, Serialize};

pub use active_set::CG_RELATIVE_TOLERANCE;
pub use energy::{energy, equivalence_check, EquivalenceReport};
pub use operator::DiscreteOperator;
pub use psor::OMEGA as PSOR_OMEGA;

use crate::coeff::{CoefficientField, Matrix};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Smallest grid (nodes per axis) the active-set method still coarsens from.
const MIN_COARSE_NODES: usize = 33;

/// Grids at least this fine get a coarse-grid initial guess.
const NESTED_START_NODES: usize = 65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Psor,
    ActiveSet,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Psor => "psor",
            Method::ActiveSet => "active_set",
        })
    }
}

/// Grid, coefficients, nonnegative boundary data and solver controls.
#[derive(Debug, Clone)]
pub struct ObstacleProblemSpec {
    coefficients: CoefficientField,
    boundary: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl ObstacleProblemSpec {
    /// `boundary` is full-length; only boundary-node entries are read.
    pub fn new(coefficients: CoefficientField, boundary: Vec<f64>, tol: f64, max_iter: usize) -> Result<Self> {
        let grid = *coefficients.grid();
        if boundary.len() != grid.node_count() {
            return Err(Error::FieldSize {
                expected: grid.node_count(),
                found: boundary.len(),
            });
        }
        let mut psi = vec![0.0; grid.node_count()];
        for node in grid.boundary_nodes() {
            let v = boundary[node];
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeBoundary { node, value: v });
            }
            psi[node] = v;
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol".into(),
                reason: format!("must be positive, got {tol}"),
            });
        }
        Ok(Self {
            coefficients,
            boundary: psi,
            tol,
            max_iter,
        })
    }

    /// Boundary data sampled from a function of position.
    pub fn from_profile(
        coefficients: CoefficientField,
        profile: impl Fn(&crate::grid::Point) -> f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<Self> {
        let grid = *coefficients.grid();
        let psi = (0..grid.node_count())
            .map(|i| if grid.is_boundary(i) { profile(&grid.coords(i)) } else { 0.0 })
            .collect();
        Self::new(coefficients, psi, tol, max_iter)
    }

    pub fn grid(&self) -> &Grid {
        self.coefficients.grid()
    }

    pub fn coefficients(&self) -> &CoefficientField {
        &self.coefficients
    }

    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    fn boundary_is_zero(&self) -> bool {
        self.boundary.iter().all(|&v| v == 0.0)
    }
}

/// Solution with its complementarity diagnostics.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: ScalarField,
    pub iterations: usize,
    /// Inner CG iterations (active-set method only).
    pub inner_iterations: usize,
    pub residual: f64,
    /// Interior nodes with `w = 0`.
    pub active: Vec<usize>,
    /// Interior nodes with `w > 0`.
    pub positive: Vec<usize>,
    pub energy: f64,
    pub method: Method,
}

/// Machine-readable summary written next to the solution field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    pub active_count: usize,
}

impl SolveResult {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            method: self.method,
            iterations: self.iterations,
            residual: self.residual,
            energy: self.energy,
            active_count: self.active.len(),
        }
    }

    pub fn w(&self) -> &[f64] {
        self.solution.values()
    }
}

fn finish(spec: &ObstacleProblemSpec, w: Vec<f64>, iterations: usize, inner: usize, residual: f64, method: Method) -> SolveResult {
    let grid = *spec.grid();
    let (mut active, mut positive) = (Vec::new(), Vec::new());
    for a in grid.interior_nodes() {
        if w[a] > 0.0 {
            positive.push(a);
        } else {
            active.push(a);
        }
    }
    let solution = ScalarField::new(grid, w).expect("solver preserves field length");
    let energy = energy(&solution, spec);
    SolveResult {
        solution,
        iterations,
        inner_iterations: inner,
        residual,
        active,
        positive,
        energy,
        method,
    }
}

/// Solves the obstacle problem; an exhausted iteration budget is an
/// [`Error::NotConverged`] carrying the last iterate.
pub fn solve_obstacle(spec: &ObstacleProblemSpec, method: Method) -> Result<SolveResult> {
    let op = DiscreteOperator::assemble(spec.coefficients(), spec.boundary())?;
    let target = spec.tol * op.residual_scale();
    if spec.boundary_is_zero() {
        let w = vec![0.0; spec.grid().node_count()];
        let residual = op.complementarity_residual(&w);
        return Ok(finish(spec, w, 0, 0, residual, method));
    }
    let (w, iterations, inner, residual, converged) = match method {
        Method::Psor => {
            let out = psor::solve(&op, op.with_boundary(|_| 0.0), target, spec.max_iter);
            (out.w, out.sweeps, 0, out.residual, out.converged)
        }
        Method::ActiveSet => {
            let start = initial_guess(spec, &op)?;
            let out = active_set::solve(&op, start, target, spec.max_iter);
            (out.w, out.outer, out.inner, out.residual, out.converged)
        }
    };
    let result = finish(spec, w, iterations, inner, residual, method);
    if converged {
        Ok(result)
    } else {
        Err(Error::NotConverged {
            method,
            iterations,
            residual,
            partial: Box::new(result),
        })
    }
}

/// Coarse-grid solution prolonged to the fine grid, or zero for small grids.
fn initial_guess(spec: &ObstacleProblemSpec, op: &DiscreteOperator) -> Result<Vec<f64>> {
    let grid = *spec.grid();
    let n = grid.nodes_per_axis();
    let coarse_nodes = (n + 1) / 2;
    if n < NESTED_START_NODES || n % 2 == 0 || coarse_nodes < MIN_COARSE_NODES {
        return Ok(op.with_boundary(|_| 0.0));
    }
    let coarse_grid = Grid::new(grid.dim(), grid.half_width(), coarse_nodes)?;
    let coeffs = spec.coefficients.subsample(coarse_grid, 2)?;
    let psi: Vec<f64> = (0..coarse_grid.node_count())
        .map(|c| {
            let m = coarse_grid.multi_index(c);
            spec.boundary[grid.flat_index(&[2 * m[0], 2 * m[1], 2 * m[2]])]
        })
        .collect();
    let coarse = ObstacleProblemSpec::new(coeffs, psi, spec.tol, spec.max_iter)?;
    let coarse_w = match solve_obstacle(&coarse, Method::ActiveSet) {
        Ok(r) => r.solution,
        Err(Error::NotConverged { partial, .. }) => partial.solution,
        Err(e) => return Err(e),
    };
    Ok(op.with_boundary(|a| {
        coarse_w
            .interpolate(&grid.coords(a))
            .unwrap_or(0.0)
            .max(0.0)
    }))
}

/// Solves the constant-coefficient companion problem `div(A grad u) = mu chi_{u>0}`
/// with `u = w` on the boundary.
pub fn constant_reference_solve(
    spec: &ObstacleProblemSpec,
    matrix: &Matrix,
    mu: f64,
    boundary_from: &ScalarField,
    method: Method,
) -> Result<SolveResult> {
    let grid = *spec.grid();
    if boundary_from.grid() != &grid {
        return Err(Error::FieldSize {
            expected: grid.node_count(),
            found: boundary_from.values().len(),
        });
    }
    let c = spec.coefficients();
    if !(c.lambda_star()..=c.big_lambda_star()).contains(&mu) {
        return Err(Error::InvalidParameter {
            name: "mu".into(),
            reason: format!(
                "{mu} outside the forcing range [{}, {}]",
                c.lambda_star(),
                c.big_lambda_star()
            ),
        });
    }
    let coeffs = CoefficientField::from_parts(
        grid,
        *matrix,
        vec![1.0; grid.node_count()],
        vec![mu; grid.node_count()],
    )?;
    let companion = ObstacleProblemSpec::new(coeffs, boundary_from.values().to_vec(), spec.tol, spec.max_iter)?;
    solve_obstacle(&companion, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{identity_matrix, make_coefficients, CoefficientFamily, ForcingFamily};
    use crate::grid::build_grid;

    fn half_line(nodes: usize, tol: f64) -> ObstacleProblemSpec {
        let g = build_grid(1, 1.0, nodes).unwrap();
        let c = make_coefficients(g, &CoefficientFamily::Identity, &ForcingFamily::default()).unwrap();
        ObstacleProblemSpec::from_profile(c, |p| 0.5 * p[0].max(0.0).powi(2), tol, 1_000_000).unwrap()
    }

    #[test]
    fn rejects_negative_boundary() {
        let g = build_grid(1, 1.0, 9).unwrap();
        let c = make_coefficients(g, &CoefficientFamily::Identity, &ForcingFamily::default()).unwrap();
        let err = ObstacleProblemSpec::from_profile(c, |p| p[0], 1e-10, 10).unwrap_err();
        assert!(matches!(err, Error::NegativeBoundary { node: 0, .. }));
    }

    #[test]
    fn zero_boundary_gives_zero_immediately() {
        let g = build_grid(2, 1.0, 17).unwrap();
        let c = make_coefficients(g, &CoefficientFamily::SmoothOscillation { t: 0.3, k: 1.0 }, &ForcingFamily::default())
            .unwrap();
        let spec = ObstacleProblemSpec::new(c, vec![0.0; g.node_count()], 1e-10, 10).unwrap();
        for method in [Method::Psor, Method::ActiveSet] {
            let r = solve_obstacle(&spec, method).unwrap();
            assert_eq!(r.iterations, 0);
            assert!(r.w().iter().all(|&v| v == 0.0));
            assert_eq!(r.energy, 0.0);
            assert!(r.positive.is_empty());
        }
    }

    #[test]
    fn half_line_solution_is_recovered() {
        let spec = half_line(257, 1e-10);
        let h = spec.grid().h();
        for method in [Method::Psor, Method::ActiveSet] {
            let r = solve_obstacle(&spec, method).unwrap();
            let g = spec.grid();
            let err = (0..g.node_count())
                .map(|i| (r.w()[i] - 0.5 * g.coords(i)[0].max(0.0).powi(2)).abs())
                .fold(0.0, f64::max);
            assert!(err <= 5.0 * h * h, "{method}: {err}");
            assert!(r.residual <= 1e-10);
            assert!(r.w().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn nonconvergence_is_explicit() {
        let spec = ObstacleProblemSpec { max_iter: 3, ..half_line(129, 1e-12) };
        match solve_obstacle(&spec, Method::Psor) {
            Err(Error::NotConverged { iterations, residual, partial, .. }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
                assert_eq!(partial.residual, residual);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn tolerance_below_rounding_floor_stops_early() {
        // Residuals cannot fall below about 1e-16 |w| / h^2, far above 1e-30.
        let g = build_grid(2, 1.0, 65).unwrap();
        let c = make_coefficients(g, &CoefficientFamily::Identity, &ForcingFamily::default()).unwrap();
        let spec = ObstacleProblemSpec::from_profile(c, |p| crate::fixtures::radial(p, 2, 0.4), 1e-30, 1_000_000).unwrap();
        match solve_obstacle(&spec, Method::ActiveSet) {
            Err(Error::NotConverged { iterations, partial, .. }) => {
                assert!(iterations < 100, "{iterations} outer iterations");
                assert!(partial.residual < 1e-10);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn reference_solve_is_a_fixed_point() {
        let spec = half_line(129, 1e-11);
        let w = solve_obstacle(&spec, Method::ActiveSet).unwrap();
        let u = constant_reference_solve(&spec, &identity_matrix(), 1.0, &w.solution, Method::ActiveSet).unwrap();
        let diff = w.w().iter().zip(u.w()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn reference_solve_checks_mu_range() {
        let spec = half_line(33, 1e-10);
        let w = ScalarField::zeros(*spec.grid());
        assert!(constant_reference_solve(&spec, &identity_matrix(), 2.0, &w, Method::Psor).is_err());
    }
}
