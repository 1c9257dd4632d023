//! Hausdorff distance between finite point sets, using a uniform spatial hash
//! for the nearest-neighbour queries.

use std::collections::HashMap;

use crate::grid::{distance, Point};

struct SpatialHash<'a> {
    points: &'a [Point],
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
    lo: [i64; 3],
    hi: [i64; 3],
}

impl<'a> SpatialHash<'a> {
    fn new(points: &'a [Point]) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in points {
            for k in 0..3 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        let extent = (0..3).map(|k| max[k] - min[k]).fold(0.0, f64::max);
        // Roughly a handful of points per occupied cell for curve-like sets.
        let cell = if extent > 0.0 {
            (extent / (points.len() as f64).sqrt().max(1.0)).max(extent * 1e-9)
        } else {
            1.0
        };
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for (i, p) in points.iter().enumerate() {
            let key = Self::key_of(p, cell);
            for k in 0..3 {
                lo[k] = lo[k].min(key[k]);
                hi[k] = hi[k].max(key[k]);
            }
            buckets.entry(key).or_default().push(i);
        }
        Self {
            points,
            cell,
            buckets,
            lo,
            hi,
        }
    }

    fn key_of(p: &Point, cell: f64) -> [i64; 3] {
        [
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        ]
    }

    /// Distance from `q` to the nearest stored point, searching rings of cells.
    fn nearest(&self, q: &Point) -> f64 {
        let c = Self::key_of(q, self.cell);
        let mut best = f64::INFINITY;
        // Beyond this ring every stored cell has been visited.
        let max_ring = (0..3)
            .map(|k| (c[k] - self.lo[k]).abs().max((self.hi[k] - c[k]).abs()))
            .max()
            .unwrap_or(0);
        for ring in 0..=max_ring {
            // Cells at Chebyshev ring `ring` are at least (ring - 1) cells away.
            if best <= (ring - 1).max(0) as f64 * self.cell {
                break;
            }
            let span = |k: usize| (-ring).max(self.lo[k] - c[k])..=ring.min(self.hi[k] - c[k]);
            for dx in span(0) {
                for dy in span(1) {
                    for dz in span(2) {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(ids) = self.buckets.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &i in ids {
                                best = best.min(distance(q, &self.points[i]));
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

/// `sup_{a in A} d(a, B)`; `None` if either set is empty.
pub fn directed_hausdorff(a: &[Point], b: &[Point]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let hash = SpatialHash::new(b);
    Some(a.iter().map(|p| hash.nearest(p)).fold(0.0, f64::max))
}

/// `max{sup_{a in A} d(a, B), sup_{b in B} d(b, A)}`; `None` if either set is empty.
pub fn hausdorff_distance(a: &[Point], b: &[Point]) -> Option<f64> {
    Some(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}
