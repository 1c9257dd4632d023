//! Coefficient fields `a^{ij}(x)` and forcing `f(x)` with certified bounds,
//! plus the sampled mean-oscillation (VMO modulus) estimator.
//!
//! Every supported family has the form `a(x) = s(x) * A` with a constant
//! symmetric matrix `A` and a positive scalar profile `s`. Variable
//! off-diagonal entries therefore only arise from hand-built fields, and the
//! assembler rejects them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

pub type Matrix = [[f64; 3]; 3];

/// Bound on `|t|` (or the amplitude) for the oscillating families.
pub const MAX_OSCILLATION: f64 = 0.5;

/// Regularization of `log|log|x||` at the origin.
pub const LOG_REGULARIZATION: f64 = 1e-3;

pub fn identity_matrix() -> Matrix {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

/// Eigenvalues of the leading `dim x dim` block, ascending.
pub fn symmetric_eigenvalues(m: &Matrix, dim: usize) -> Vec<f64> {
    let mat = DMatrix::from_fn(dim, dim, |i, j| m[i][j]);
    let mut ev: Vec<f64> = SymmetricEigen::new(mat).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientFamily {
    Identity,
    /// Fixed symmetric positive definite matrix, given row by row.
    Constant { matrix: Vec<Vec<f64>> },
    /// `(1 + t sin(2 pi k x1) sin(2 pi k x2)) I`.
    SmoothOscillation { t: f64, k: f64 },
    /// `(1 + amplitude sin(log|log(|x| + 1e-3)|)) I`: VMO, not Lipschitz at 0.
    LogOscillation { amplitude: f64 },
    /// `(1 +/- t) I` on tiles of side `1/(2k)`: bounded but not VMO.
    Checkerboard { t: f64, k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingFamily {
    Constant { value: f64 },
    /// `1 + t cos(2 pi k x1)`.
    Cosine { t: f64, k: f64 },
}

impl Default for ForcingFamily {
    fn default() -> Self {
        ForcingFamily::Constant { value: 1.0 }
    }
}

fn check_oscillation(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value.abs() > MAX_OSCILLATION {
        return Err(Error::EllipticityBound {
            name,
            value,
            bound: MAX_OSCILLATION,
        });
    }
    Ok(())
}

fn check_frequency(k: f64) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidParameter {
            name: "k".into(),
            reason: format!("frequency must be positive, got {k}"),
        });
    }
    Ok(())
}

impl CoefficientFamily {
    fn validate(&self, dim: usize) -> Result<Matrix> {
        match self {
            CoefficientFamily::Identity => Ok(identity_matrix()),
            CoefficientFamily::Constant { matrix } => {
                if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
                    return Err(Error::InvalidParameter {
                        name: "matrix".into(),
                        reason: format!("expected a {dim}x{dim} matrix"),
                    });
                }
                let mut m = [[0.0; 3]; 3];
                for i in 0..dim {
                    for j in 0..dim {
                        if (matrix[i][j] - matrix[j][i]).abs() > 1e-14 * matrix[i][j].abs().max(1.0)
                        {
                            return Err(Error::InvalidParameter {
                                name: "matrix".into(),
                                reason: "matrix must be symmetric".into(),
                            });
                        }
                        m[i][j] = matrix[i][j];
                    }
                }
                Ok(m)
            }
            CoefficientFamily::SmoothOscillation { t, k } | CoefficientFamily::Checkerboard { t, k } => {
                check_oscillation("t", *t)?;
                check_frequency(*k)?;
                Ok(identity_matrix())
            }
            CoefficientFamily::LogOscillation { amplitude } => {
                check_oscillation("amplitude", *amplitude)?;
                Ok(identity_matrix())
            }
        }
    }

    /// Scalar profile `s(x)` multiplying the base matrix.
    pub fn profile(&self, p: &Point, dim: usize) -> f64 {
        match self {
            CoefficientFamily::Identity | CoefficientFamily::Constant { .. } => 1.0,
            CoefficientFamily::SmoothOscillation { t, k } => {
                let mut s = (2.0 * PI * k * p[0]).sin();
                if dim >= 2 {
                    s *= (2.0 * PI * k * p[1]).sin();
                }
                1.0 + t * s
            }
            CoefficientFamily::LogOscillation { amplitude } => {
                let r = (0..dim).map(|a| p[a] * p[a]).sum::<f64>().sqrt();
                let inner = (r + LOG_REGULARIZATION).ln().abs().max(f64::MIN_POSITIVE);
                1.0 + amplitude * inner.ln().abs().sin()
            }
            CoefficientFamily::Checkerboard { t, k } => {
                let parity: i64 = (0..dim).map(|a| (2.0 * k * p[a]).floor() as i64).sum();
                if parity.rem_euclid(2) == 0 {
                    1.0 + t
                } else {
                    1.0 - t
                }
            }
        }
    }
}

impl ForcingFamily {
    pub fn value(&self, p: &Point) -> f64 {
        match self {
            ForcingFamily::Constant { value } => *value,
            ForcingFamily::Cosine { t, k } => 1.0 + t * (2.0 * PI * k * p[0]).cos(),
        }
    }
}

/// Per-node coefficients `a(x) = s(x) A` and forcing `f(x)` with certified bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    grid: Grid,
    base: Matrix,
    profile: Vec<f64>,
    forcing: Vec<f64>,
    lambda: f64,
    big_lambda: f64,
    lambda_star: f64,
    big_lambda_star: f64,
}

/// Builds coefficients and forcing for a grid from named families.
pub fn make_coefficients(
    grid: Grid,
    family: &CoefficientFamily,
    forcing: &ForcingFamily,
) -> Result<CoefficientField> {
    let base = family.validate(grid.dim())?;
    let profile = (0..grid.node_count())
        .map(|i| family.profile(&grid.coords(i), grid.dim()))
        .collect();
    let forcing = (0..grid.node_count())
        .map(|i| forcing.value(&grid.coords(i)))
        .collect();
    CoefficientField::from_parts(grid, base, profile, forcing)
}

impl CoefficientField {
    /// Certifies and wraps raw parts. Fails on non-elliptic nodes or nonpositive forcing.
    pub fn from_parts(grid: Grid, base: Matrix, profile: Vec<f64>, forcing: Vec<f64>) -> Result<Self> {
        let n = grid.node_count();
        for len in [profile.len(), forcing.len()] {
            if len != n {
                return Err(Error::FieldSize { expected: n, found: len });
            }
        }
        let dim = grid.dim();
        for i in 0..dim {
            for j in 0..dim {
                if base[i][j] != base[j][i] {
                    return Err(Error::InvalidParameter {
                        name: "matrix".into(),
                        reason: "matrix must be symmetric".into(),
                    });
                }
            }
        }
        let ev = symmetric_eigenvalues(&base, dim);
        let (ev_min, ev_max) = (ev[0], ev[dim - 1]);
        let mut lambda = f64::INFINITY;
        let mut big_lambda = f64::NEG_INFINITY;
        for (node, &s) in profile.iter().enumerate() {
            let lo = (s * ev_min).min(s * ev_max);
            let hi = (s * ev_min).max(s * ev_max);
            if !(lo > 0.0) || !hi.is_finite() {
                return Err(Error::Ellipticity { node, min_eigenvalue: lo });
            }
            lambda = lambda.min(lo);
            big_lambda = big_lambda.max(hi);
        }
        let mut lambda_star = f64::INFINITY;
        let mut big_lambda_star = f64::NEG_INFINITY;
        for (node, &f) in forcing.iter().enumerate() {
            if !(f > 0.0) || !f.is_finite() {
                return Err(Error::NonPositiveForcing { node, value: f });
            }
            lambda_star = lambda_star.min(f);
            big_lambda_star = big_lambda_star.max(f);
        }
        Ok(Self {
            grid,
            base,
            profile,
            forcing,
            lambda,
            big_lambda,
            lambda_star,
            big_lambda_star,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn base(&self) -> &Matrix {
        &self.base
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn forcing(&self) -> &[f64] {
        &self.forcing
    }

    /// Smallest certified eigenvalue over all nodes.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Largest certified eigenvalue over all nodes.
    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    pub fn big_lambda_star(&self) -> f64 {
        self.big_lambda_star
    }

    pub fn matrix_at(&self, node: usize) -> Matrix {
        let s = self.profile[node];
        let mut m = [[0.0; 3]; 3];
        for i in 0..self.grid.dim() {
            for j in 0..self.grid.dim() {
                m[i][j] = s * self.base[i][j];
            }
        }
        m
    }

    /// Nodal values of the entry `a^{ij}`.
    pub fn entry(&self, i: usize, j: usize) -> Vec<f64> {
        self.profile.iter().map(|s| s * self.base[i][j]).collect()
    }

    pub fn has_off_diagonal(&self) -> bool {
        let d = self.grid.dim();
        (0..d).any(|i| (0..d).any(|j| i != j && self.base[i][j] != 0.0))
    }

    pub fn profile_is_constant(&self) -> bool {
        self.profile.windows(2).all(|w| w[0] == w[1])
    }

    /// Copy on a coarser grid whose nodes are every `stride`-th fine node.
    pub fn subsample(&self, coarse: Grid, stride: usize) -> Result<Self> {
        let pick = |v: &[f64]| -> Vec<f64> {
            (0..coarse.node_count())
                .map(|c| {
                    let m = coarse.multi_index(c);
                    let fine = [m[0] * stride, m[1] * stride, m[2] * stride];
                    v[self.grid.flat_index(&fine)]
                })
                .collect()
        };
        Self::from_parts(coarse, self.base, pick(&self.profile), pick(&self.forcing))
    }

    /// `(L1, L2)` norms over `region` of the entrywise deviation from `reference`.
    pub fn l_distance_to_matrix(&self, reference: &Matrix, region: &[usize]) -> (f64, f64) {
        let d = self.grid.dim();
        let vol = self.grid.cell_volume();
        let (mut l1, mut l2) = (0.0, 0.0);
        for &node in region {
            let m = self.matrix_at(node);
            for i in 0..d {
                for j in 0..d {
                    let dev = m[i][j] - reference[i][j];
                    l1 += dev.abs() * vol;
                    l2 += dev * dev * vol;
                }
            }
        }
        (l1, l2.sqrt())
    }

    /// `(L1, L2)` norms over `region` of `f - reference`.
    pub fn l_distance_forcing(&self, reference: f64, region: &[usize]) -> (f64, f64) {
        l_distance_to_constant(&self.grid, &self.forcing, reference, region)
    }
}

/// `(L1, L2)` norms over `region` of `values - reference`.
pub fn l_distance_to_constant(grid: &Grid, values: &[f64], reference: f64, region: &[usize]) -> (f64, f64) {
    let vol = grid.cell_volume();
    let (l1, l2) = region.iter().fold((0.0, 0.0), |(a, b), &i| {
        let dev = values[i] - reference;
        (a + dev.abs() * vol, b + dev * dev * vol)
    });
    (l1, l2.sqrt())
}

/// Sampled VMO modulus `eta(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmoReport {
    /// `(r, eta(r))` in ascending `r`.
    pub modulus: Vec<(f64, f64)>,
    pub center_count: usize,
    pub radii: Vec<f64>,
}

/// Default VMO centers: every 4th node along each axis, keeping `B_r` inside the box.
pub fn coarsened_centers(grid: &Grid, r_max: f64) -> Vec<Point> {
    (0..grid.node_count())
        .filter(|&i| grid.multi_index(i)[..grid.dim()].iter().all(|m| m % 4 == 0))
        .map(|i| grid.coords(i))
        .filter(|p| grid.contains_ball(p, r_max))
        .collect()
}

/// Mean oscillation `(1/|B|) sum |g - g_B|` over the ball nodes.
pub fn mean_oscillation(grid: &Grid, values: &[f64], center: &Point, rho: f64) -> f64 {
    let nodes = grid.ball_nodes(center, rho);
    if nodes.is_empty() {
        return 0.0;
    }
    let n = nodes.len() as f64;
    let mean = nodes.iter().map(|&i| values[i]).sum::<f64>() / n;
    nodes.iter().map(|&i| (values[i] - mean).abs()).sum::<f64>() / n
}

/// Estimates `eta(r) = sup_{rho <= r, y} mean oscillation` over dyadic `rho` and sampled
/// centers (`None` selects [`coarsened_centers`]).
pub fn vmo_modulus(grid: &Grid, values: &[f64], radii: &[f64], centers: Option<&[Point]>) -> Result<VmoReport> {
    if values.len() != grid.node_count() {
        return Err(Error::FieldSize {
            expected: grid.node_count(),
            found: values.len(),
        });
    }
    let min = 2.0 * grid.h();
    let mut radii: Vec<f64> = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    if let Some(&r) = radii.iter().find(|&&r| r < min) {
        return Err(Error::Unresolvable { radius: r, min });
    }
    let r_max = radii.last().copied().unwrap_or(min);
    let owned;
    let centers = match centers {
        Some(c) => c,
        None => {
            owned = coarsened_centers(grid, r_max);
            &owned
        }
    };

    let mut scales: Vec<f64> = Vec::new();
    for &r in &radii {
        let mut rho = r;
        while rho >= min * (1.0 - 1e-12) {
            if !scales.iter().any(|s| (s - rho).abs() <= 1e-12 * rho) {
                scales.push(rho);
            }
            rho /= 2.0;
        }
    }
    scales.sort_by(f64::total_cmp);
    let per_scale: Vec<(f64, f64)> = scales
        .iter()
        .map(|&rho| {
            let m = centers
                .iter()
                .map(|c| mean_oscillation(grid, values, c, rho))
                .fold(0.0, f64::max);
            (rho, m)
        })
        .collect();

    let modulus = radii
        .iter()
        .map(|&r| {
            let eta = per_scale
                .iter()
                .filter(|(rho, _)| *rho <= r * (1.0 + 1e-12))
                .map(|(_, m)| *m)
                .fold(0.0, f64::max);
            (r, eta)
        })
        .collect();
    Ok(VmoReport {
        modulus,
        center_count: centers.len(),
        radii,
    })
}
