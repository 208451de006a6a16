//! Exact nearest-neighbor search over a uniform hash grid.
//!
//! Points are bucketed by `floor(p / cell_size)`. A query scans Chebyshev
//! shells of cells around its own cell, nearest first, and stops once every
//! unscanned cell is provably farther than the best candidate. Ties resolve
//! to the lowest point index, matching a brute-force scan.

use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L1,
    L2,
}

impl Metric {
    /// Comparison key: L1 distance, or squared L2 distance.
    #[inline]
    pub fn key(self, a: Vec3, b: Vec3) -> f64 {
        match self {
            Metric::L1 => geom::l1_distance(a, b),
            Metric::L2 => geom::l2_distance_sq(a, b),
        }
    }

    #[inline]
    fn key_to_distance(self, key: f64) -> f64 {
        match self {
            Metric::L1 => key,
            Metric::L2 => libm::sqrt(key),
        }
    }

    /// Both metrics dominate the Chebyshev distance, so an L-inf bound `d`
    /// becomes this key bound.
    #[inline]
    fn bound_to_key(self, d: f64) -> f64 {
        match self {
            Metric::L1 => d,
            Metric::L2 => d * d,
        }
    }

    /// Cost used by assignment: L1 distance or Euclidean distance.
    #[inline]
    pub fn distance(self, a: Vec3, b: Vec3) -> f64 {
        self.key_to_distance(self.key(a, b))
    }
}

/// Nearest indexed point and its distance under the query metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

type Cell = [i64; 3];

#[derive(Debug, Clone)]
pub struct NnIndex {
    cell_size: f64,
    inv_cell: f64,
    points: Vec<Vec3>,
    /// Point indices grouped by cell; each bucket is ascending.
    order: Vec<u32>,
    buckets: HashMap<Cell, (u32, u32)>,
    cell_min: Cell,
    cell_max: Cell,
}

impl NnIndex {
    pub fn build(points: &[Vec3], cell_size: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::InvalidParameter("cell size must be positive"));
        }
        if let Some(i) = points.iter().position(|p| !geom::is_finite(*p)) {
            return Err(Error::NonFiniteCoordinate(i));
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter("too many points for the index"));
        }
        let inv_cell = 1.0 / cell_size;
        let cells: Vec<Cell> = points.iter().map(|p| cell_of(*p, inv_cell)).collect();

        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        // Stable sort keeps indices ascending inside each bucket.
        order.sort_by_key(|&i| cells[i as usize]);

        let mut buckets = HashMap::with_capacity(points.len());
        let mut cell_min = cells[0];
        let mut cell_max = cells[0];
        let mut start = 0usize;
        while start < order.len() {
            let c = cells[order[start] as usize];
            let mut end = start + 1;
            while end < order.len() && cells[order[end] as usize] == c {
                end += 1;
            }
            buckets.insert(c, (start as u32, end as u32));
            for a in 0..3 {
                cell_min[a] = cell_min[a].min(c[a]);
                cell_max[a] = cell_max[a].max(c[a]);
            }
            start = end;
        }

        Ok(Self {
            cell_size,
            inv_cell,
            points: points.to_vec(),
            order,
            buckets,
            cell_min,
            cell_max,
        })
    }

    /// Builds with a cell size giving roughly two points per occupied cell of
    /// the bounding box.
    pub fn build_auto(points: &[Vec3]) -> Result<Self> {
        Self::build(points, auto_cell_size(points))
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    /// Exact nearest neighbor of `q`; ties go to the lowest index.
    pub fn nearest(&self, q: Vec3, metric: Metric) -> Neighbor {
        let c = cell_of(q, self.inv_cell);
        let mut max_ring = 0i64;
        for a in 0..3 {
            max_ring = max_ring
                .max((c[a] - self.cell_min[a]).abs())
                .max((self.cell_max[a] - c[a]).abs());
        }

        let mut best_key = f64::INFINITY;
        let mut best_idx = usize::MAX;
        let slack = 1e-9 * self.cell_size;
        for ring in 0..=max_ring {
            if best_idx != usize::MAX && ring >= 1 {
                // Cells on this shell are at least (ring - 1) whole cells away.
                let bound = ((ring - 1) as f64 * self.cell_size - slack).max(0.0);
                if best_key < metric.bound_to_key(bound) {
                    break;
                }
            }
            self.scan_shell(c, ring, |i| {
                let k = metric.key(q, self.points[i]);
                if k < best_key || (k == best_key && i < best_idx) {
                    best_key = k;
                    best_idx = i;
                }
            });
        }
        Neighbor {
            index: best_idx,
            distance: metric.key_to_distance(best_key),
        }
    }

    fn scan_shell(&self, c: Cell, ring: i64, mut visit: impl FnMut(usize)) {
        let lo = |a: usize| (c[a] - ring).max(self.cell_min[a]);
        let hi = |a: usize| (c[a] + ring).min(self.cell_max[a]);
        let (x0, x1, y0, y1, z0, z1) = (lo(0), hi(0), lo(1), hi(1), lo(2), hi(2));
        if x0 > x1 || y0 > y1 || z0 > z1 {
            return;
        }
        let mut visit_cell = |cell: Cell| {
            if let Some(&(s, e)) = self.buckets.get(&cell) {
                for &i in &self.order[s as usize..e as usize] {
                    visit(i as usize);
                }
            }
        };
        for x in x0..=x1 {
            let x_on = (x - c[0]).abs() == ring;
            for y in y0..=y1 {
                if x_on || (y - c[1]).abs() == ring {
                    for z in z0..=z1 {
                        visit_cell([x, y, z]);
                    }
                } else {
                    let zl = c[2] - ring;
                    let zh = c[2] + ring;
                    if zl >= z0 && zl <= z1 {
                        visit_cell([x, y, zl]);
                    }
                    if zh != zl && zh >= z0 && zh <= z1 {
                        visit_cell([x, y, zh]);
                    }
                }
            }
        }
    }
}

#[inline]
fn cell_of(p: Vec3, inv_cell: f64) -> Cell {
    [
        libm::floor(p[0] * inv_cell) as i64,
        libm::floor(p[1] * inv_cell) as i64,
        libm::floor(p[2] * inv_cell) as i64,
    ]
}

/// Cell edge targeting about two points per cell of the bounding box.
pub fn auto_cell_size(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let ext = geom::sub(hi, lo);
    let longest = ext[0].max(ext[1]).max(ext[2]);
    if !(longest > 0.0) || !longest.is_finite() {
        return 1.0;
    }
    // Degenerate (flat) axes count as one tenth of the longest extent.
    let floor = longest * 0.1;
    let volume = ext.iter().map(|e| e.max(floor)).product::<f64>();
    libm::cbrt(2.0 * volume / points.len() as f64).max(longest * 1e-6)
}
