//! Minimum-cost one-to-one assignment by shortest augmenting paths with
//! dual potentials (the Jonker–Volgenant / Kuhn–Munkres family).
//!
//! Each row is inserted with one Dijkstra-style search over the reduced
//! costs, so a square `n x n` problem costs `O(n^3)` time. Costs are read
//! through [`CostMatrix`], so the point-to-point variant never materializes
//! the `n^2` matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::matching::nn::Metric;

pub trait CostMatrix {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn cost(&self, row: usize, col: usize) -> f64;
}

/// Row-major dense cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCost {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseCost {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Materializes pairwise distances between two point sets.
    pub fn pairwise(rows: &[Vec3], cols: &[Vec3], metric: Metric) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| metric.distance(rows[i], cols[j]))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl CostMatrix for DenseCost {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    fn cost(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
}

/// Pairwise point distances computed on demand.
#[derive(Debug, Clone, Copy)]
pub struct PairwiseCost<'a> {
    pub rows: &'a [Vec3],
    pub cols: &'a [Vec3],
    pub metric: Metric,
}

impl CostMatrix for PairwiseCost<'_> {
    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn cols(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    fn cost(&self, row: usize, col: usize) -> f64 {
        match self.metric {
            Metric::L1 => geom::l1_distance(self.rows[row], self.cols[col]),
            Metric::L2 => libm::sqrt(geom::l2_distance_sq(self.rows[row], self.cols[col])),
        }
    }
}

struct Transposed<'a, C: ?Sized>(&'a C);

impl<C: CostMatrix + ?Sized> CostMatrix for Transposed<'_, C> {
    fn rows(&self) -> usize {
        self.0.cols()
    }

    fn cols(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    fn cost(&self, row: usize, col: usize) -> f64 {
        self.0.cost(col, row)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row; `min(rows, cols)` of them.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl Assignment {
    /// Column assigned to each row, `None` for unmatched rows.
    pub fn row_to_col(&self, rows: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; rows];
        for &(r, c) in &self.pairs {
            out[r] = Some(c);
        }
        out
    }
}

/// Checks every entry is finite, then solves.
pub fn hungarian_match<C: CostMatrix + ?Sized>(cost: &C) -> Result<Assignment> {
    for i in 0..cost.rows() {
        for j in 0..cost.cols() {
            if !cost.cost(i, j).is_finite() {
                return Err(Error::NonFiniteCost { row: i, col: j });
            }
        }
    }
    solve_unchecked(cost)
}

/// Assignment between two point sets under `metric`, costs computed lazily.
pub fn hungarian_match_points(rows: &[Vec3], cols: &[Vec3], metric: Metric) -> Result<Assignment> {
    if let Some(i) = rows.iter().position(|p| !geom::is_finite(*p)) {
        return Err(Error::NonFiniteCost { row: i, col: 0 });
    }
    if let Some(j) = cols.iter().position(|p| !geom::is_finite(*p)) {
        return Err(Error::NonFiniteCost { row: 0, col: j });
    }
    solve_unchecked(&PairwiseCost { rows, cols, metric })
}

fn solve_unchecked<C: CostMatrix + ?Sized>(cost: &C) -> Result<Assignment> {
    let (m, n) = (cost.rows(), cost.cols());
    if m == 0 || n == 0 {
        return Err(Error::EmptySet);
    }
    let mut pairs = if m <= n {
        solve_wide(cost)
    } else {
        let mut p: Vec<(usize, usize)> = solve_wide(&Transposed(cost)).into_iter().map(|(c, r)| (r, c)).collect();
        p.sort_unstable();
        p
    };
    pairs.shrink_to_fit();
    let mut total_cost = 0.0;
    for &(r, c) in &pairs {
        total_cost += cost.cost(r, c);
    }
    Ok(Assignment { pairs, total_cost })
}

/// Requires `rows <= cols`. Every row gets matched.
///
/// Each row is inserted by a Dijkstra search over reduced costs that only
/// scans columns not yet reached; potentials are updated once per row.
fn solve_wide<C: CostMatrix + ?Sized>(cost: &C) -> Vec<(usize, usize)> {
    let (m, n) = (cost.rows(), cost.cols());
    debug_assert!(m <= n);
    const NONE: usize = usize::MAX;

    let mut u = vec![0.0f64; m];
    let mut v = vec![0.0f64; n];
    let mut col_for_row = vec![NONE; m];
    let mut row_for_col = vec![NONE; n];
    let mut path = vec![NONE; n];
    let mut shortest = vec![f64::INFINITY; n];
    let mut remaining: Vec<usize> = Vec::with_capacity(n);
    let mut reached_cols: Vec<usize> = Vec::with_capacity(n);
    let mut reached_rows: Vec<usize> = Vec::with_capacity(m);

    for cur in 0..m {
        shortest.iter_mut().for_each(|x| *x = f64::INFINITY);
        remaining.clear();
        remaining.extend(0..n);
        reached_cols.clear();
        reached_rows.clear();

        let mut min_val = 0.0f64;
        let mut i = cur;
        let sink = loop {
            reached_rows.push(i);
            let base = min_val - u[i];
            let mut lowest = f64::INFINITY;
            let mut best = 0;
            for (k, &j) in remaining.iter().enumerate() {
                let r = base + cost.cost(i, j) - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                let s = shortest[j];
                // Prefer unassigned columns on ties: shorter augmenting paths.
                if s < lowest || (s == lowest && row_for_col[j] == NONE) {
                    lowest = s;
                    best = k;
                }
            }
            min_val = lowest;
            let j = remaining.swap_remove(best);
            reached_cols.push(j);
            if row_for_col[j] == NONE {
                break j;
            }
            i = row_for_col[j];
        };

        u[cur] += min_val;
        for &r in &reached_rows[1..] {
            u[r] += min_val - shortest[col_for_row[r]];
        }
        for &c in &reached_cols {
            v[c] -= min_val - shortest[c];
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row_for_col[j] = r;
            core::mem::swap(&mut col_for_row[r], &mut j);
            if r == cur {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = col_for_row.iter().enumerate().map(|(r, &c)| (r, c)).collect();
    pairs.sort_unstable();
    pairs
}
