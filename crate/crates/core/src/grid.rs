//! Uniform node-centered Cartesian grids on the box `[-half_width, half_width]^n`
//! and the nodal scalar fields that live on them.
//!
//! Nodes are stored in lexicographic order with axis 0 varying slowest.
//! Set measures are counting measure times `h^n`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// A point in up to three dimensions. Coordinates past the grid dimension are zero.
pub type Point = [f64; 3];

/// Smallest nodes-per-axis accepted by [`build_grid`].
pub const MIN_ANALYSIS_NODES: usize = 9;

/// Pads a coordinate slice to a [`Point`].
pub fn point(coords: &[f64]) -> Point {
    let mut p = [0.0; 3];
    for (dst, src) in p.iter_mut().zip(coords) {
        *dst = *src;
    }
    p
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    distance_sq(a, b).sqrt()
}

pub fn distance_sq(a: &Point, b: &Point) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

/// Uniform vertex grid. Small and `Copy`; the boundary mask is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    h: f64,
    nodes_per_axis: usize,
}

/// Builds an analysis grid: dimension in {1, 2, 3} and at least nine nodes per axis.
pub fn build_grid(dim: usize, half_width: f64, nodes_per_axis: usize) -> Result<Grid> {
    if nodes_per_axis < MIN_ANALYSIS_NODES {
        if !(1..=3).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        return Err(Error::TooCoarse {
            nodes: nodes_per_axis,
            min: MIN_ANALYSIS_NODES,
        });
    }
    Grid::new(dim, half_width, nodes_per_axis)
}

impl Grid {
    /// Raw constructor without the analysis resolution floor (needs at least 2 nodes).
    pub fn new(dim: usize, half_width: f64, nodes_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        if nodes_per_axis < 2 {
            return Err(Error::TooCoarse {
                nodes: nodes_per_axis,
                min: 2,
            });
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter {
                name: "half_width".into(),
                reason: format!("must be positive and finite, got {half_width}"),
            });
        }
        Ok(Self {
            dim,
            half_width,
            h: 2.0 * half_width / (nodes_per_axis - 1) as f64,
            nodes_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.pow(self.dim as u32)
    }

    /// Volume element `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Flat-index stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.nodes_per_axis.pow((self.dim - 1 - axis) as u32)
    }

    /// Coordinate of grid line `i` along any axis.
    #[inline]
    pub fn line_coord(&self, i: usize) -> f64 {
        if i + 1 == self.nodes_per_axis {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.h
        }
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let mut m = [0; 3];
        let mut rest = idx;
        for axis in (0..self.dim).rev() {
            m[axis] = rest % self.nodes_per_axis;
            rest /= self.nodes_per_axis;
        }
        m
    }

    pub fn flat_index(&self, m: &[usize]) -> usize {
        m[..self.dim]
            .iter()
            .fold(0, |acc, &i| acc * self.nodes_per_axis + i)
    }

    pub fn coords(&self, idx: usize) -> Point {
        let m = self.multi_index(idx);
        let mut p = [0.0; 3];
        for axis in 0..self.dim {
            p[axis] = self.line_coord(m[axis]);
        }
        p
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let last = self.nodes_per_axis - 1;
        let m = self.multi_index(idx);
        m[..self.dim].iter().any(|&i| i == 0 || i == last)
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        (0..self.node_count()).map(|i| self.is_boundary(i)).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| !self.is_boundary(i))
            .collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.is_boundary(i))
            .collect()
    }

    /// Axis neighbors of a node (up to `2n`).
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let m = self.multi_index(idx);
        (0..self.dim).flat_map(move |axis| {
            let s = self.stride(axis);
            let lo = (m[axis] > 0).then(|| idx - s);
            let hi = (m[axis] + 1 < self.nodes_per_axis).then(|| idx + s);
            lo.into_iter().chain(hi)
        })
    }

    /// Nearest grid node to `p`, clamped into the box.
    pub fn nearest_node(&self, p: &Point) -> usize {
        let mut m = [0usize; 3];
        for axis in 0..self.dim {
            let t = ((p[axis] + self.half_width) / self.h).round();
            m[axis] = t.clamp(0.0, (self.nodes_per_axis - 1) as f64) as usize;
        }
        self.flat_index(&m)
    }

    /// True when the closed ball `B_r(center)` lies inside the box.
    pub fn contains_ball(&self, center: &Point, r: f64) -> bool {
        (0..self.dim).all(|axis| center[axis].abs() + r <= self.half_width + 1e-12)
    }

    fn index_window(&self, center: &Point, r: f64) -> [(usize, usize); 3] {
        let mut win = [(0, 0); 3];
        let last = (self.nodes_per_axis - 1) as f64;
        for (axis, w) in win.iter_mut().enumerate().take(self.dim) {
            let lo = ((center[axis] - r + self.half_width) / self.h).floor().clamp(0.0, last);
            let hi = ((center[axis] + r + self.half_width) / self.h).ceil().clamp(0.0, last);
            *w = (lo as usize, hi as usize);
        }
        win
    }

    fn nodes_in_window(&self, center: &Point, r: f64, keep: impl Fn(f64) -> bool) -> Vec<usize> {
        let win = self.index_window(center, r);
        let mut out = Vec::new();
        let range = |axis: usize| {
            if axis < self.dim {
                win[axis].0..=win[axis].1
            } else {
                0..=0
            }
        };
        for i0 in range(0) {
            for i1 in range(1) {
                for i2 in range(2) {
                    let m = [i0, i1, i2];
                    let idx = self.flat_index(&m);
                    if keep(distance_sq(&self.coords(idx), center)) {
                        out.push(idx);
                    }
                }
            }
        }
        out
    }

    /// Nodes in the open ball `{x : |x - center| < r}`.
    pub fn ball_nodes(&self, center: &Point, r: f64) -> Vec<usize> {
        // Grid-aligned radii put nodes exactly on the sphere; keep them out despite roundoff.
        let cut = (r - 1e-9 * self.h).max(0.0).powi(2);
        self.nodes_in_window(center, r, |d2| d2 < cut)
    }

    /// Nodes in the closed ball `{x : |x - center| <= r}`.
    pub fn closed_ball_nodes(&self, center: &Point, r: f64) -> Vec<usize> {
        let cut = (r + 1e-9 * self.h).powi(2);
        self.nodes_in_window(center, r, |d2| d2 <= cut)
    }

    /// Counting measure `|set| * h^n`.
    pub fn measure(&self, nodes: &[usize]) -> f64 {
        nodes.len() as f64 * self.cell_volume()
    }
}

/// Free-function form of [`Grid::ball_nodes`].
pub fn ball_nodes(grid: &Grid, center: &Point, r: f64) -> Vec<usize> {
    grid.ball_nodes(center, r)
}

/// Free-function form of [`Grid::measure`].
pub fn measure(grid: &Grid, nodes: &[usize]) -> f64 {
    grid.measure(nodes)
}

/// Volume of the unit ball in dimension `dim`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => unreachable!("dimension checked at grid construction"),
    }
}

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::FieldSize {
                expected: grid.node_count(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.node_count()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(&grid.coords(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multilinear interpolation; `None` outside the box.
    pub fn interpolate(&self, p: &Point) -> Option<f64> {
        let g = &self.grid;
        let last = g.nodes_per_axis - 1;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for axis in 0..g.dim {
            let t = (p[axis] + g.half_width) / g.h;
            if !(-1e-9..=last as f64 + 1e-9).contains(&t) {
                return None;
            }
            let t = t.clamp(0.0, last as f64);
            let i = (t.floor() as usize).min(last - 1);
            base[axis] = i;
            frac[axis] = t - i as f64;
        }
        let corners = 1usize << g.dim;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut weight = 1.0;
            let mut idx = 0;
            for axis in 0..g.dim {
                let up = (c >> axis) & 1 == 1;
                let f = frac[axis];
                // Skip zero-weight corners so exact node hits never touch a neighbor.
                weight *= if up { f } else { 1.0 - f };
                idx += (base[axis] + up as usize) * g.stride(axis);
            }
            if weight != 0.0 {
                acc += weight * self.values[idx];
            }
        }
        Some(acc)
    }

    /// Text format: header `n h nodes_per_axis`, then one value per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{} {} {}",
            self.grid.dim, self.grid.h, self.grid.nodes_per_axis
        )?;
        let mut buf = String::with_capacity(self.values.len() * 24);
        for v in &self.values {
            let _ = writeln!(buf, "{v}");
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty input".into()))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let bad = |what: &str| Error::Parse(format!("bad {what} in header `{header}`"));
        let dim: usize = parts[0].parse().map_err(|_| bad("dimension"))?;
        let h: f64 = parts[1].parse().map_err(|_| bad("spacing"))?;
        let nodes: usize = parts[2].parse().map_err(|_| bad("node count"))?;
        if nodes < 2 {
            return Err(bad("node count"));
        }
        let grid = Grid::new(dim, h * (nodes - 1) as f64 / 2.0, nodes)?;
        let mut values = Vec::with_capacity(grid.node_count());
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            values.push(
                t.parse()
                    .map_err(|_| Error::Parse(format!("line {}: `{t}`", lineno + 2)))?,
            );
        }
        Self::new(grid, values)
    }

    /// CSV with one row per node: coordinates then value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let axes: Vec<String> = (0..self.grid.dim).map(|k| format!("x{k}")).collect();
        writeln!(out, "{},value", axes.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.coords(i);
            for c in &p[..self.grid.dim] {
                write!(out, "{c},")?;
            }
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn three_node_line() {
        let g = Grid::new(1, 1.0, 3).unwrap();
        assert_eq!(g.h(), 1.0);
        let xs: Vec<f64> = (0..3).map(|i| g.coords(i)[0]).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
        assert_eq!(g.boundary_mask(), vec![true, false, true]);
    }

    #[test]
    fn counts_and_boundary() {
        let g = Grid::new(2, 1.0, 5).unwrap();
        assert_eq!(g.node_count(), 25);
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.boundary_nodes().len(), 16);

        let g = build_grid(3, 1.0, 9).unwrap();
        assert_eq!(g.node_count(), 729);
        assert_eq!(g.h(), 0.25);
    }

    #[test]
    fn rejects_bad_dimension_and_coarse_grids() {
        assert!(matches!(build_grid(4, 1.0, 9), Err(Error::Dimension(4))));
        assert!(matches!(build_grid(0, 1.0, 33), Err(Error::Dimension(0))));
        assert!(matches!(
            build_grid(2, 1.0, 8),
            Err(Error::TooCoarse { nodes: 8, .. })
        ));
    }

    #[test]
    fn corners_are_exact() {
        let g = build_grid(2, 0.75, 97).unwrap();
        let last = g.node_count() - 1;
        assert_eq!(g.coords(0), [-0.75, -0.75, 0.0]);
        assert_eq!(g.coords(last), [0.75, 0.75, 0.0]);
    }

    #[test]
    fn small_balls() {
        let g = Grid::new(1, 1.0, 3).unwrap();
        assert_eq!(g.ball_nodes(&[0.0; 3], 0.5), vec![1]);

        let g = Grid::new(2, 1.0, 5).unwrap();
        assert_eq!(g.ball_nodes(&[0.0; 3], 0.6).len(), 5);
        // Nodes exactly at distance r are outside the open ball.
        assert_eq!(g.ball_nodes(&[0.0; 3], 0.5).len(), 1);
        assert_eq!(g.closed_ball_nodes(&[0.0; 3], 0.5).len(), 5);
    }

    #[test]
    fn disc_area_converges() {
        let g = build_grid(2, 1.0, 257).unwrap();
        let area = g.measure(&g.ball_nodes(&[0.0; 3], 0.5));
        assert!((area / (PI / 4.0) - 1.0).abs() < 0.02, "{area}");

        let g = build_grid(2, 1.0, 513).unwrap();
        let area = g.measure(&g.ball_nodes(&[0.0; 3], 0.5));
        assert!((area / (PI / 4.0) - 1.0).abs() < 0.01, "{area}");
    }

    #[test]
    fn measure_counts() {
        let g = Grid::new(1, 1.0, 3).unwrap();
        assert_eq!(g.measure(&[]), 0.0);
        assert_eq!(g.measure(&[0, 1, 2]), 3.0);
    }

    #[test]
    fn ball_volume_ratio_tends_to_one() {
        let r = 0.3;
        let center = [0.01, -0.02, 0.0];
        let errs: Vec<f64> = [65, 129, 257]
            .iter()
            .map(|&n| {
                let g = build_grid(2, 1.0, n).unwrap();
                let m = g.measure(&g.ball_nodes(&center, r));
                (m / (unit_ball_volume(2) * r * r) - 1.0).abs()
            })
            .collect();
        assert!(errs[2] < errs[0], "{errs:?}");
        assert!(errs[2] < 0.01, "{errs:?}");
    }

    #[test]
    fn neighbors_on_edges() {
        let g = Grid::new(2, 1.0, 5).unwrap();
        assert_eq!(g.neighbors(0).count(), 2);
        assert_eq!(g.neighbors(12).count(), 4);
    }

    #[test]
    fn interpolation_reproduces_bilinear() {
        let g = build_grid(2, 1.0, 17).unwrap();
        let f = |p: &Point| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
        let field = ScalarField::from_fn(g, f);
        for p in [[0.013, -0.77, 0.0], [1.0, 1.0, 0.0], [-0.3, 0.41, 0.0]] {
            assert!((field.interpolate(&p).unwrap() - f(&p)).abs() < 1e-13);
        }
        assert!(field.interpolate(&[1.5, 0.0, 0.0]).is_none());
    }

    #[test]
    fn text_round_trip() {
        let g = build_grid(2, 1.0, 9).unwrap();
        let field = ScalarField::from_fn(g, |p| p[0].sin() * p[1] + 1.0 / 3.0);
        let mut buf = Vec::new();
        field.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("2 0.25 9\n"));
        let back = ScalarField::read_text(buf.as_slice()).unwrap();
        assert_eq!(back, field);
    }

    #[test]
    fn text_rejects_wrong_count() {
        let input = "1 1 3\n0\n1\n";
        assert!(matches!(
            ScalarField::read_text(input.as_bytes()),
            Err(Error::FieldSize { expected: 3, found: 2 })
        ));
    }
}
