use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::hausdorff::hausdorff_distance;
use super::FreeBoundaryGeometry;
use crate::error::{Error, Result};
use crate::grid::{distance, Point};

/// Hyperplane `{y : normal . y = offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Point,
    pub offset: f64,
    /// Sum of squared normal distances of the fitted points.
    pub residual: f64,
    pub points: usize,
}

impl Plane {
    pub fn signed_distance(&self, p: &Point) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Total-least-squares hyperplane through `x` for the points in the open ball
/// `B_r(x)`: the normal is the eigenvector of the smallest eigenvalue of the
/// second-moment matrix centered at `x`. The normal's largest component is
/// made positive.
pub fn best_plane(points: &[Point], x: &Point, r: f64, dim: usize) -> Result<Plane> {
    let local: Vec<Point> = points.iter().filter(|p| distance(p, x) < r).copied().collect();
    if local.len() < dim {
        return Err(Error::DegenerateFit {
            found: local.len(),
            needed: dim,
        });
    }
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for p in &local {
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += (p[i] - x[i]) * (p[j] - x[j]);
            }
        }
    }
    let mut normal = [0.0; 3];
    if dim == 2 {
        // Closed form keeps the fit exactly equivariant under quarter turns.
        let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
        let lambda = 0.5 * (a + c) - (0.5 * (a - c)).hypot(b);
        let (u, v) = ([lambda - c, b], [b, lambda - a]);
        let pick = if u[0].hypot(u[1]) >= v[0].hypot(v[1]) { u } else { v };
        let len = pick[0].hypot(pick[1]);
        normal = if len > 0.0 { [pick[0] / len, pick[1] / len, 0.0] } else { [0.0, 1.0, 0.0] };
    } else {
        let eig = SymmetricEigen::new(m);
        let k = eig.eigenvalues.imin();
        for (i, n) in normal.iter_mut().enumerate().take(dim) {
            *n = eig.eigenvectors[(i, k)];
        }
    }
    let big = (0..dim).max_by(|&a, &b| normal[a].abs().total_cmp(&normal[b].abs())).unwrap();
    if normal[big] < 0.0 {
        normal.iter_mut().for_each(|n| *n = -*n);
    }
    let offset = dot(&normal, x);
    let residual = local.iter().map(|p| (dot(&normal, p) - offset).powi(2)).sum();
    Ok(Plane {
        normal,
        offset,
        residual,
        points: local.len(),
    })
}

/// Points of `plane ∩ B_r(x)` on a square lattice of the given spacing in the
/// plane's tangent coordinates, centered at `x`.
fn sample_plane(plane: &Plane, x: &Point, r: f64, spacing: f64, dim: usize) -> Vec<Point> {
    let n = plane.normal;
    let basis: Vec<Point> = match dim {
        1 => Vec::new(),
        2 => vec![[-n[1], n[0], 0.0]],
        _ => {
            // Gram-Schmidt on the coordinate axis least aligned with the normal.
            let axis = (0..3).min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap();
            let mut t = [0.0; 3];
            t[axis] = 1.0;
            let d = dot(&t, &n);
            for k in 0..3 {
                t[k] -= d * n[k];
            }
            let len = dot(&t, &t).sqrt();
            t.iter_mut().for_each(|c| *c /= len);
            let s = [n[1] * t[2] - n[2] * t[1], n[2] * t[0] - n[0] * t[2], n[0] * t[1] - n[1] * t[0]];
            vec![t, s]
        }
    };
    let steps = (r / spacing).floor() as i64;
    let mut out = Vec::new();
    let mut visit = |coef: &[f64]| {
        let mut p = *x;
        for (b, &c) in basis.iter().zip(coef) {
            for k in 0..3 {
                p[k] += c * b[k];
            }
        }
        if distance(&p, x) < r {
            out.push(p);
        }
    };
    match basis.len() {
        0 => visit(&[]),
        1 => (-steps..=steps).for_each(|i| visit(&[i as f64 * spacing])),
        _ => {
            for i in -steps..=steps {
                for j in -steps..=steps {
                    visit(&[i as f64 * spacing, j as f64 * spacing]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessEntry {
    pub radius: f64,
    pub plane: Option<Plane>,
    /// Hausdorff distance between the sampled plane section and the free boundary in the ball.
    pub distance: Option<f64>,
    /// `distance / radius`.
    pub ratio: Option<f64>,
    /// Running maximum of `ratio` over radii `<= radius`.
    pub theta: f64,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub center: Point,
    /// Sorted by decreasing radius.
    pub entries: Vec<FlatnessEntry>,
}

impl FlatnessReport {
    /// `theta` at the smallest radius.
    pub fn theta_min_radius(&self) -> Option<f64> {
        self.entries.last().map(|e| e.theta)
    }
}

/// Flatness of the free boundary at `x` over the given radii. Radii whose plane
/// fit is degenerate are reported as skipped.
pub fn flatness_modulus(geom: &FreeBoundaryGeometry, x: &Point, radii: &[f64]) -> FlatnessReport {
    let grid = geom.grid();
    let dim = grid.dim();
    let spacing = 0.5 * grid.h();
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.total_cmp(b));
    let mut running: f64 = 0.0;
    let mut entries = Vec::with_capacity(radii.len());
    for &r in &radii {
        let fb = geom.free_boundary_in_ball(x, r);
        let mut entry = FlatnessEntry {
            radius: r,
            plane: None,
            distance: None,
            ratio: None,
            theta: running,
            skipped: None,
        };
        match best_plane(&fb, x, r, dim) {
            Ok(plane) => {
                let samples = sample_plane(&plane, x, r, spacing, dim);
                let d = hausdorff_distance(&samples, &fb).expect("both sets nonempty");
                running = running.max(d / r);
                entry.plane = Some(plane);
                entry.distance = Some(d);
                entry.ratio = Some(d / r);
                entry.theta = running;
            }
            Err(e) => entry.skipped = Some(e.to_string()),
        }
        entries.push(entry);
    }
    entries.reverse();
    FlatnessReport { center: *x, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fb::{default_threshold, extract_geometry};
    use crate::fixtures::{half_space, radial};
    use crate::grid::{build_grid, ScalarField};
    use proptest::prelude::*;

    #[test]
    fn collinear_points_give_their_line() {
        let x = [0.1, 0.2, 0.0];
        let dir = [0.6, 0.8];
        let pts: Vec<Point> = (-5..=5)
            .map(|i| {
                let t = i as f64 * 0.01;
                [x[0] + t * dir[0], x[1] + t * dir[1], 0.0]
            })
            .collect();
        let p = best_plane(&pts, &x, 1.0, 2).unwrap();
        assert!(p.residual < 1e-24);
        assert!((p.normal[0] * dir[0] + p.normal[1] * dir[1]).abs() < 1e-12);
        assert!(p.signed_distance(&x).abs() < 1e-15);
    }

    #[test]
    fn too_few_points_is_degenerate() {
        let pts = [[0.0, 0.0, 0.0]];
        assert!(matches!(
            best_plane(&pts, &[0.0; 3], 1.0, 2),
            Err(Error::DegenerateFit { found: 1, needed: 2 })
        ));
        assert!(matches!(best_plane(&pts, &[0.0; 3], 1.0, 3), Err(Error::DegenerateFit { .. })));
    }

    #[test]
    fn half_space_plane_is_horizontal() {
        for dim in [2, 3] {
            let nodes = if dim == 2 { 129 } else { 33 };
            let g = build_grid(dim, 1.0, nodes).unwrap();
            let w = ScalarField::from_fn(g, |p| half_space(p, dim, 0.5));
            let geom = extract_geometry(&w, default_threshold(&g));
            for (x, r) in [([0.0; 3], 0.5), ([0.25, 0.0, 0.0], 0.3)] {
                let p = best_plane(&geom.free_boundary_points(), &x, r, dim).unwrap();
                assert!((p.normal[dim - 1] - 1.0).abs() < 1e-12, "{p:?}");
                assert!(p.residual < 1e-20);
            }
        }
    }

    #[test]
    fn radial_plane_is_tangent() {
        let g = build_grid(2, 1.0, 257).unwrap();
        let w = ScalarField::from_fn(g, |p| radial(p, 2, 0.4));
        let geom = extract_geometry(&w, default_threshold(&g));
        for angle in [0.0f64, 0.3, 1.1, 2.5] {
            let target = [0.4 * angle.cos(), 0.4 * angle.sin(), 0.0];
            let x = g.coords(geom.nearest_free_boundary_node(&target).unwrap());
            let p = best_plane(&geom.free_boundary_points(), &x, 0.1, 2).unwrap();
            let cos = (p.normal[0] * angle.cos() + p.normal[1] * angle.sin()).abs();
            assert!(cos >= 5f64.to_radians().cos(), "angle {angle}: {p:?}");
        }
    }

    #[test]
    fn plane_residual_is_invariant_under_quarter_turns() {
        let pts: Vec<Point> = [[0.1, 0.3], [0.2, 0.1], [-0.4, 0.25], [0.05, -0.3], [0.33, 0.31]]
            .iter()
            .map(|p| [p[0], p[1], 0.0])
            .collect();
        let x = [0.05, 0.05, 0.0];
        let rot = |p: &Point| [-p[1], p[0], 0.0];
        let base = best_plane(&pts, &x, 2.0, 2).unwrap();
        let turned: Vec<Point> = pts.iter().map(rot).collect();
        let q = best_plane(&turned, &rot(&x), 2.0, 2).unwrap();
        assert_eq!(base.residual, q.residual);
    }

    #[test]
    fn gridline_free_boundary_is_flat_to_sampling() {
        // Exact half-space: the free boundary is the gridline x_2 = 0.
        let g = build_grid(2, 1.0, 129).unwrap();
        let w = ScalarField::from_fn(g, |p| half_space(p, 2, 0.5));
        let geom = extract_geometry(&w, default_threshold(&g));
        let radii: Vec<f64> = (0..5).map(|k| 0.5 / 2f64.powi(k)).collect();
        let rep = flatness_modulus(&geom, &[0.0; 3], &radii);
        let r_min = radii[radii.len() - 1];
        for e in &rep.entries {
            assert!(e.ratio.unwrap() <= g.h() / e.radius + 1e-12, "{e:?}");
            // The running max inherits the bound at the smallest radius.
            assert!(e.theta <= g.h() / r_min + 1e-12);
        }
    }

    #[test]
    fn radial_flatness_follows_the_sagitta() {
        let r0 = 0.4;
        let g = build_grid(2, 1.0, 513).unwrap();
        let w = ScalarField::from_fn(g, |p| radial(p, 2, r0));
        let geom = extract_geometry(&w, default_threshold(&g));
        let x = g.coords(geom.nearest_free_boundary_node(&[r0, 0.0, 0.0]).unwrap());
        let rep = flatness_modulus(&geom, &x, &[0.2, 0.1, 0.05]);
        for e in &rep.entries {
            let r = e.radius;
            // Gap between the tangent line at distance r from x and the circle.
            let expected = ((r0 * r0 + r * r).sqrt() - r0) / r;
            let ratio = e.ratio.unwrap();
            assert!(ratio <= 2.0 * expected + g.h() / r && ratio >= 0.5 * expected, "r {r}: {ratio} vs {expected}");
        }
        let ratios: Vec<f64> = rep.entries.iter().map(|e| e.ratio.unwrap()).collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    }

    #[test]
    fn flatness_marks_empty_balls_skipped() {
        let g = build_grid(2, 1.0, 65).unwrap();
        let w = ScalarField::from_fn(g, |p| half_space(p, 2, 0.5));
        let geom = extract_geometry(&w, default_threshold(&g));
        let rep = flatness_modulus(&geom, &[0.0, 0.5, 0.0], &[0.2, 0.1]);
        assert!(rep.entries.iter().all(|e| e.skipped.is_some() && e.theta == 0.0));
    }

    proptest! {
        #[test]
        fn theta_is_nondecreasing_in_radius(angle in 0.0f64..std::f64::consts::TAU, k in 3usize..7) {
            let g = build_grid(2, 1.0, 129).unwrap();
            let w = ScalarField::from_fn(g, |p| radial(p, 2, 0.4));
            let geom = extract_geometry(&w, default_threshold(&g));
            let x = g.coords(geom.nearest_free_boundary_node(&[0.4 * angle.cos(), 0.4 * angle.sin(), 0.0]).unwrap());
            let radii: Vec<f64> = (0..k).map(|j| 0.4 / 2f64.powi(j as i32)).collect();
            let rep = flatness_modulus(&geom, &x, &radii);
            for pair in rep.entries.windows(2) {
                prop_assert!(pair[0].theta >= pair[1].theta);
            }
            for e in &rep.entries {
                if let Some(p) = e.plane {
                    prop_assert!(p.signed_distance(&x).abs() <= 0.5 * g.h());
                }
            }
        }
    }
}
