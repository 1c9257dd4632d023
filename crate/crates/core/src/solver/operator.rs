//! Stiffness operator of the weak form `int a^{ij} D_i w D_j phi`.
//!
//! The discrete energy is a sum of edge terms `c_ab (w_a - w_b)^2`: axis edges
//! carry arithmetic face averages of `a^{pp}`, and for constant off-diagonal
//! `a^{pq}` each `(p, q)` plaquette contributes `+-a^{pq}/2` on its two
//! diagonals (which reproduces the centered cross difference). The operator row
//! of an interior node is `(K w)_a = sum_b k_ab (w_a - w_b)` with
//! `k_ab = c_ab / h^n`, evaluated in this flux form so that large boundary
//! values never enter a cancelling sum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// `K` over interior nodes, stored as flux couplings to every stencil neighbor
/// (interior or boundary, by global node index).
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Grid,
    interior: Vec<usize>,
    /// Local row of each global node, `usize::MAX` on the boundary.
    local: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    couplings: Vec<f64>,
    diag: Vec<f64>,
    forcing: Vec<f64>,
    boundary: Vec<f64>,
}

/// Trapezoid weight of the coordinates of `m` on axes not in `skip`.
fn trapezoid_weight(grid: &Grid, m: &[usize; 3], skip: &[usize]) -> f64 {
    let last = grid.nodes_per_axis() - 1;
    (0..grid.dim())
        .filter(|a| !skip.contains(a))
        .map(|a| if m[a] == 0 || m[a] == last { 0.5 } else { 1.0 })
        .product()
}

/// Calls `visit(a, b, c)` for every energy edge term `c (w_a - w_b)^2` of the grid.
pub(crate) fn for_each_edge(coeffs: &CoefficientField, mut visit: impl FnMut(usize, usize, f64)) {
    let grid = coeffs.grid();
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let h2 = grid.h() * grid.h();
    let last = grid.nodes_per_axis() - 1;
    let base = coeffs.base();
    let profile = coeffs.profile();
    for a in 0..grid.node_count() {
        let m = grid.multi_index(a);
        for p in 0..dim {
            if m[p] == last {
                continue;
            }
            let b = a + grid.stride(p);
            let face = 0.5 * (profile[a] + profile[b]) * base[p][p];
            visit(a, b, vol * trapezoid_weight(grid, &m, &[p]) * face / h2);
            for q in p + 1..dim {
                if m[q] == last || base[p][q] == 0.0 {
                    continue;
                }
                let c = vol * trapezoid_weight(grid, &m, &[p, q]) * profile[a] * base[p][q] / (2.0 * h2);
                let (sp, sq) = (grid.stride(p), grid.stride(q));
                visit(a, a + sp + sq, c);
                visit(a + sp, a + sq, -c);
            }
        }
    }
}

impl DiscreteOperator {
    /// Assembles the operator; `boundary` holds `psi` at boundary nodes (full-length).
    pub fn assemble(coeffs: &CoefficientField, boundary: &[f64]) -> Result<Self> {
        let grid = *coeffs.grid();
        if boundary.len() != grid.node_count() {
            return Err(Error::FieldSize {
                expected: grid.node_count(),
                found: boundary.len(),
            });
        }
        if coeffs.has_off_diagonal() && !coeffs.profile_is_constant() {
            return Err(Error::VariableOffDiagonal);
        }
        let dim = grid.dim();
        let h2 = grid.h() * grid.h();
        let base = coeffs.base();
        let profile = coeffs.profile();
        let interior = grid.interior_nodes();
        let mut local = vec![usize::MAX; grid.node_count()];
        for (i, &a) in interior.iter().enumerate() {
            local[a] = i;
        }

        let mut row_ptr = Vec::with_capacity(interior.len() + 1);
        let mut cols = Vec::with_capacity(interior.len() * 2 * dim);
        let mut couplings = Vec::with_capacity(interior.len() * 2 * dim);
        let mut diag = Vec::with_capacity(interior.len());
        row_ptr.push(0);
        for &a in &interior {
            let mut d = 0.0;
            for p in 0..dim {
                let s = grid.stride(p);
                for b in [a - s, a + s] {
                    let k = 0.5 * (profile[a] + profile[b]) * base[p][p] / h2;
                    cols.push(b);
                    couplings.push(k);
                    d += k;
                }
                for q in p + 1..dim {
                    if base[p][q] == 0.0 {
                        continue;
                    }
                    let t = grid.stride(q);
                    let k = profile[a] * base[p][q] / (2.0 * h2);
                    for (b, sign) in [(a + s + t, 1.0), (a - s - t, 1.0), (a + s - t, -1.0), (a - s + t, -1.0)] {
                        cols.push(b);
                        couplings.push(sign * k);
                        d += sign * k;
                    }
                }
            }
            diag.push(d);
            row_ptr.push(cols.len());
        }
        let mut bvals = vec![0.0; grid.node_count()];
        for a in 0..grid.node_count() {
            if grid.is_boundary(a) {
                bvals[a] = boundary[a];
            }
        }
        Ok(Self {
            grid,
            interior,
            local,
            row_ptr,
            cols,
            couplings,
            diag,
            forcing: coeffs.forcing().to_vec(),
            boundary: bvals,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Local row index of a global node, `None` on the boundary.
    pub fn local_index(&self, node: usize) -> Option<usize> {
        let l = self.local[node];
        (l != usize::MAX).then_some(l)
    }

    pub fn dimension(&self) -> usize {
        self.interior.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn forcing(&self) -> &[f64] {
        &self.forcing
    }

    /// Boundary data as a full-length vector (zero at interior nodes).
    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    /// Stencil of local row `i` as `(global neighbor, k_ab)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.couplings[span].iter().copied())
    }

    /// `(K w)_a` for interior row `i`, in flux form over a full-length `w`.
    #[inline]
    pub fn apply_row(&self, i: usize, w: &[f64]) -> f64 {
        let a = self.interior[i];
        let wa = w[a];
        let mut acc = 0.0;
        for j in self.row_ptr[i]..self.row_ptr[i + 1] {
            acc += self.couplings[j] * (wa - w[self.cols[j]]);
        }
        acc
    }

    /// Complementarity row quantity `(K w + f)_a`.
    #[inline]
    pub fn residual_row(&self, i: usize, w: &[f64]) -> f64 {
        self.apply_row(i, w) + self.forcing[self.interior[i]]
    }

    /// `(K w + f)` on interior rows.
    pub fn residual(&self, w: &[f64]) -> Vec<f64> {
        (0..self.interior.len()).map(|i| self.residual_row(i, w)).collect()
    }

    /// `max_a |min(w_a, (K w + f)_a)|` over interior nodes.
    pub fn complementarity_residual(&self, w: &[f64]) -> f64 {
        (0..self.interior.len())
            .map(|i| w[self.interior[i]].min(self.residual_row(i, w)).abs())
            .fold(0.0, f64::max)
    }

    /// Scale of the stopping rule: `max(1, |f|_inf)` over interior nodes.
    pub fn residual_scale(&self) -> f64 {
        self.interior
            .iter()
            .map(|&a| self.forcing[a].abs())
            .fold(1.0, f64::max)
    }

    /// Load vector `F = f + K_{I,boundary} psi` over interior rows.
    pub fn load(&self) -> Vec<f64> {
        (0..self.interior.len())
            .map(|i| {
                let a = self.interior[i];
                let mut v = self.forcing[a];
                for (b, k) in self.row(i) {
                    if self.local[b] == usize::MAX {
                        v -= k * self.boundary[b];
                    }
                }
                v
            })
            .collect()
    }

    /// Interior-interior block as sorted `(row, col, value)` triplets in local indices.
    pub fn matrix_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.interior.len() {
            out.push((i, i, self.diag[i]));
            for (b, k) in self.row(i) {
                if let Some(j) = self.local_index(b) {
                    out.push((i, j, -k));
                }
            }
        }
        out.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        out
    }

    /// `K x` for a local interior vector (boundary treated as zero).
    pub fn apply_local(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.grid.node_count()];
        for (i, &a) in self.interior.iter().enumerate() {
            full[a] = x[i];
        }
        (0..self.interior.len()).map(|i| self.apply_row(i, &full)).collect()
    }

    /// Smallest Rayleigh quotient `x^T K x / x^T x` over seeded random vectors.
    pub fn min_rayleigh_quotient(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| {
                let x: Vec<f64> = (0..self.interior.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let kx = self.apply_local(&x);
                let num: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
                let den: f64 = x.iter().map(|a| a * a).sum();
                num / den
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Full-length vector with boundary data and the given interior values.
    pub fn with_boundary(&self, interior_values: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut w = self.boundary.clone();
        for &a in &self.interior {
            w[a] = interior_values(a);
        }
        w
    }
}
