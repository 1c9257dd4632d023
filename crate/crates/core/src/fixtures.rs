//! Closed-form solutions and synthetic fields used as boundary data, references
//! and negative controls.

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Point, ScalarField};

/// Named boundary profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryProfile {
    Zero,
    /// `c ((x_n)^+)^2` in the last coordinate.
    HalfSpace { c: f64 },
    /// Radial solution with coincidence set `B_{r0}` (for `a = I`, `f = 1`).
    Radial { r0: f64 },
    /// Boundary values read from a field text file on the same grid.
    File { path: String },
}

/// `c ((x_n)^+)^2`; with `c = 1/2` this solves `Delta w = chi_{w>0}`.
pub fn half_space(p: &Point, dim: usize, c: f64) -> f64 {
    c * p[dim - 1].max(0.0).powi(2)
}

/// Radial solution of `Delta w = 1` outside `B_{r0}` with `w = |grad w| = 0` on
/// `|x| = r0`, extended by zero inside.
pub fn radial(p: &Point, dim: usize, r0: f64) -> f64 {
    let r = (0..dim).map(|k| p[k] * p[k]).sum::<f64>().sqrt();
    if r <= r0 {
        return 0.0;
    }
    match dim {
        1 => 0.5 * (r - r0).powi(2),
        2 => (r * r - r0 * r0) / 4.0 - 0.5 * r0 * r0 * (r / r0).ln(),
        3 => r * r / 6.0 + r0.powi(3) / (3.0 * r) - r0 * r0 / 2.0,
        _ => unreachable!("dimension checked at grid construction"),
    }
}

impl BoundaryProfile {
    /// Value at a point; `File` profiles are resolved by the caller.
    pub fn value(&self, p: &Point, dim: usize) -> Option<f64> {
        match self {
            BoundaryProfile::Zero => Some(0.0),
            BoundaryProfile::HalfSpace { c } => Some(half_space(p, dim, *c)),
            BoundaryProfile::Radial { r0 } => Some(radial(p, dim, *r0)),
            BoundaryProfile::File { .. } => None,
        }
    }

    /// Exact solution in the whole box when coefficients are `I` and `f = 1`.
    pub fn exact_solution(&self, grid: &Grid) -> Option<ScalarField> {
        match self {
            BoundaryProfile::Zero => Some(ScalarField::zeros(*grid)),
            BoundaryProfile::HalfSpace { c } if *c == 0.5 => {
                Some(ScalarField::from_fn(*grid, |p| half_space(p, grid.dim(), 0.5)))
            }
            BoundaryProfile::Radial { r0 } => Some(ScalarField::from_fn(*grid, |p| radial(p, grid.dim(), *r0))),
            _ => None,
        }
    }
}

/// Synthetic (not solved) fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticField {
    /// `((x_n)^+)^4`: grows too slowly for nondegeneracy.
    Quartic,
    /// `x_1^2 / 2`: contact only on the hyperplane `x_1 = 0`.
    LineContact,
}

impl SyntheticField {
    pub fn build(self, grid: &Grid) -> ScalarField {
        let dim = grid.dim();
        match self {
            SyntheticField::Quartic => ScalarField::from_fn(*grid, |p| p[dim - 1].max(0.0).powi(4)),
            SyntheticField::LineContact => ScalarField::from_fn(*grid, |p| 0.5 * p[0] * p[0]),
        }
    }
}

/// Max over nodes and cell midpoints of `|I_h w - exact|`, where `I_h` is the
/// multilinear interpolant.
pub fn interpolant_max_error(w: &ScalarField, exact: impl Fn(&Point) -> f64) -> f64 {
    let g = *w.grid();
    let h = g.h();
    let mut err: f64 = 0.0;
    for i in 0..g.node_count() {
        let p = g.coords(i);
        err = err.max((w.values()[i] - exact(&p)).abs());
        let m = g.multi_index(i);
        if (0..g.dim()).all(|k| m[k] + 1 < g.nodes_per_axis()) {
            let mut mid = p;
            for c in mid.iter_mut().take(g.dim()) {
                *c += 0.5 * h;
            }
            let v = w.interpolate(&mid).expect("midpoint inside box");
            err = err.max((v - exact(&mid)).abs());
        }
    }
    err
}
