//! Free-boundary geometry on the grid: positivity/contact/free-boundary node
//! sets, contact densities and the regular/singular alternative, quadratic
//! rescalings, Hausdorff distances and hyperplane flatness.

mod blowup;
mod hausdorff;
mod plane;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use blowup::{homogeneity_fit, rescale, rescale_target, BlowupFit, MIN_SCALE_CELLS};
pub use hausdorff::{directed_hausdorff, hausdorff_distance};
pub use plane::{best_plane, flatness_modulus, FlatnessEntry, FlatnessReport, Plane};

use crate::error::{Error, Result};
use crate::grid::{Grid, Point, ScalarField};

/// Half-width of the density band around 1/2 (and the singular ceiling).
pub const DENSITY_BAND: f64 = 0.1;

/// Default positivity threshold `h^2 / 100`.
pub fn default_threshold(grid: &Grid) -> f64 {
    grid.h() * grid.h() / 100.0
}

/// Node sets of the positivity set, the contact set and the free boundary.
#[derive(Debug, Clone)]
pub struct FreeBoundaryGeometry {
    grid: Grid,
    threshold: f64,
    /// Interior nodes with `w > threshold`.
    pub positive: Vec<usize>,
    /// Interior nodes with `w <= threshold`.
    pub contact: Vec<usize>,
    /// Contact nodes with an axis neighbour in the positivity set.
    pub free_boundary: Vec<usize>,
    is_contact: Vec<bool>,
    is_free: Vec<bool>,
}

/// Splits the grid into positivity and contact sets at `threshold` and marks
/// contact nodes that touch the positivity set.
pub fn extract_geometry(w: &ScalarField, threshold: f64) -> FreeBoundaryGeometry {
    let grid = *w.grid();
    let v = w.values();
    let is_contact: Vec<bool> = v.iter().map(|&x| x <= threshold).collect();
    let is_free: Vec<bool> = (0..grid.node_count())
        .map(|i| is_contact[i] && grid.neighbors(i).any(|j| !is_contact[j]))
        .collect();
    let (mut positive, mut contact, mut free_boundary) = (Vec::new(), Vec::new(), Vec::new());
    for i in grid.interior_nodes() {
        if is_contact[i] {
            contact.push(i);
            if is_free[i] {
                free_boundary.push(i);
            }
        } else {
            positive.push(i);
        }
    }
    FreeBoundaryGeometry {
        grid,
        threshold,
        positive,
        contact,
        free_boundary,
        is_contact,
        is_free,
    }
}

impl FreeBoundaryGeometry {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_contact(&self, node: usize) -> bool {
        self.is_contact[node]
    }

    pub fn is_free_boundary(&self, node: usize) -> bool {
        self.is_free[node]
    }

    pub fn free_boundary_points(&self) -> Vec<Point> {
        self.free_boundary.iter().map(|&i| self.grid.coords(i)).collect()
    }

    /// Free-boundary points inside the open ball `B_r(center)`.
    pub fn free_boundary_in_ball(&self, center: &Point, r: f64) -> Vec<Point> {
        self.grid
            .ball_nodes(center, r)
            .into_iter()
            .filter(|&i| self.is_free[i] && !self.grid.is_boundary(i))
            .map(|i| self.grid.coords(i))
            .collect()
    }

    /// Free-boundary node nearest to `p`.
    pub fn nearest_free_boundary_node(&self, p: &Point) -> Option<usize> {
        self.free_boundary.iter().copied().min_by(|&a, &b| {
            crate::grid::distance_sq(&self.grid.coords(a), p)
                .total_cmp(&crate::grid::distance_sq(&self.grid.coords(b), p))
        })
    }

    /// Node index of `p` if it is a free-boundary node (within `h/2`).
    pub fn free_boundary_node_at(&self, p: &Point) -> Option<usize> {
        let node = self.grid.nearest_node(p);
        let close = crate::grid::distance(&self.grid.coords(node), p) <= 0.5 * self.grid.h();
        (close && self.is_free[node] && !self.grid.is_boundary(node)).then_some(node)
    }

    /// One coordinate row per free-boundary node.
    pub fn write_free_boundary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.grid.dim();
        let header: Vec<String> = (0..dim).map(|k| format!("x{k}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for p in self.free_boundary_points() {
            let row: Vec<String> = p[..dim].iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Fraction of `B_r(x)` occupied by the contact set. Free-boundary nodes sit on
/// the interface and count with weight 1/2.
pub fn contact_density(geom: &FreeBoundaryGeometry, x: &Point, r: f64) -> Result<f64> {
    let grid = geom.grid();
    let min = 4.0 * grid.h();
    if r < min * (1.0 - 1e-12) {
        return Err(Error::Unresolvable { radius: r, min });
    }
    if !grid.contains_ball(x, r) {
        return Err(Error::OutsideBox);
    }
    let ball = grid.ball_nodes(x, r);
    let mass: f64 = ball
        .iter()
        .map(|&i| match (geom.is_contact[i], geom.is_free[i]) {
            (true, true) => 0.5,
            (true, false) => 1.0,
            _ => 0.0,
        })
        .sum();
    Ok(mass / ball.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Regular,
    Singular,
    Undetermined,
}

/// Density-versus-radius evidence behind a classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: PointClass,
    /// `(r, density)` in decreasing `r`.
    pub densities: Vec<(f64, f64)>,
    pub band: f64,
    /// The finite-radius rule is a surrogate for the `r -> 0` alternative.
    pub rule: String,
}

/// Regular if the density at the smallest radius is within [`DENSITY_BAND`] of 1/2
/// and the last three radii move toward (or stay inside) that band; singular if it
/// is at most [`DENSITY_BAND`]; otherwise undetermined.
pub fn classify_point(geom: &FreeBoundaryGeometry, x: &Point, radii: &[f64]) -> Result<Classification> {
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    let densities = radii
        .iter()
        .map(|&r| Ok((r, contact_density(geom, x, r)?)))
        .collect::<Result<Vec<_>>>()?;
    let class = classify_densities(&densities);
    Ok(Classification {
        class,
        densities,
        band: DENSITY_BAND,
        rule: format!(
            "finite-radius surrogate: regular if |density - 1/2| <= {DENSITY_BAND} at the smallest radius \
             with the last three radii trending into the band; singular if density <= {DENSITY_BAND}"
        ),
    })
}

fn classify_densities(densities: &[(f64, f64)]) -> PointClass {
    let Some(&(_, last)) = densities.last() else {
        return PointClass::Undetermined;
    };
    let gap = |d: f64| (d - 0.5).abs();
    if gap(last) <= DENSITY_BAND {
        let tail = &densities[densities.len().saturating_sub(3)..];
        let trending = tail
            .windows(2)
            .all(|w| gap(w[1].1) <= DENSITY_BAND || gap(w[1].1) <= gap(w[0].1));
        if trending {
            return PointClass::Regular;
        }
    } else if last <= DENSITY_BAND {
        return PointClass::Singular;
    }
    PointClass::Undetermined
}

/// `max w` over nodes of the closed ball `B_r(x)`.
pub fn sup_on_ball(w: &ScalarField, x: &Point, r: f64) -> f64 {
    w.grid()
        .closed_ball_nodes(x, r)
        .into_iter()
        .map(|i| w.values()[i])
        .fold(f64::NEG_INFINITY, f64::max)
}
