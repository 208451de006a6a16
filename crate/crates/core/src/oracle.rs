//! Slow reference implementations used to check the fast paths.
//!
//! Everything here is quadratic or worse and written for obviousness.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::geom::{self, Vec3};
use crate::matching::{CostMatrix, DenseCost, Metric, Neighbor, WeightFn};
use crate::metrics::RaySet;
use crate::sampling::CameraModel;
use crate::types::{ClassId, LabeledPointSet, SceneConfig, VoxelGrid};

/// Linear scan; ties go to the lowest index.
pub fn brute_nearest(points: &[Vec3], q: Vec3, metric: Metric) -> Neighbor {
    let mut best = 0;
    let mut best_key = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let k = metric.key(q, *p);
        if k < best_key {
            best_key = k;
            best = i;
        }
    }
    Neighbor {
        index: best,
        distance: metric.distance(q, points[best]),
    }
}

/// Weighted L1 Chamfer distance by exhaustive search.
pub fn brute_chamfer(pred: &[Vec3], gt: &[Vec3], w: &WeightFn) -> f64 {
    let directional = |from: &[Vec3], to: &[Vec3]| {
        let mut s = 0.0;
        for p in from {
            let d = brute_nearest(to, *p, Metric::L1).distance;
            s += w.weight(d) * d;
        }
        s / from.len() as f64
    };
    directional(pred, gt) + directional(gt, pred)
}

pub fn brute_assign_labels(pred: &[Vec3], gt: &LabeledPointSet) -> Vec<ClassId> {
    let classes = gt.classes().expect("labeled ground truth");
    pred.iter()
        .map(|p| classes[brute_nearest(gt.positions(), *p, Metric::L2).index])
        .collect()
}

/// Minimum total cost over all injective assignments of the smaller side,
/// summed in row order.
pub fn permutation_min_cost(cost: &DenseCost) -> f64 {
    let (r, c) = (cost.rows(), cost.cols());
    let mut best = f64::INFINITY;
    let mut used = vec![false; r.max(c)];
    let mut pick = vec![usize::MAX; r.min(c)];
    fn recurse(
        depth: usize,
        pick: &mut Vec<usize>,
        used: &mut Vec<bool>,
        wide: usize,
        eval: &dyn Fn(&[usize]) -> f64,
        best: &mut f64,
    ) {
        if depth == pick.len() {
            let v = eval(pick);
            if v < *best {
                *best = v;
            }
            return;
        }
        for j in 0..wide {
            if !used[j] {
                used[j] = true;
                pick[depth] = j;
                recurse(depth + 1, pick, used, wide, eval, best);
                used[j] = false;
            }
        }
    }
    if r <= c {
        let eval = |p: &[usize]| {
            let mut s = 0.0;
            for (i, &j) in p.iter().enumerate() {
                s += cost.cost(i, j);
            }
            s
        };
        recurse(0, &mut pick, &mut used, c, &eval, &mut best);
    } else {
        let eval = |p: &[usize]| {
            let mut pairs: Vec<(usize, usize)> = p.iter().enumerate().map(|(j, &i)| (i, j)).collect();
            pairs.sort_unstable();
            let mut s = 0.0;
            for (i, j) in pairs {
                s += cost.cost(i, j);
            }
            s
        };
        recurse(0, &mut pick, &mut used, r, &eval, &mut best);
    }
    best
}

fn sorted_l1(from: Vec3, to: &[Vec3]) -> (usize, f64, f64) {
    let nn = brute_nearest(to, from, Metric::L1);
    let second = to
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != nn.index)
        .map(|(_, t)| geom::l1_distance(from, *t))
        .fold(f64::INFINITY, f64::min);
    (nn.index, nn.distance, second)
}

/// True when every nearest-neighbor pair is separated from the runner-up by
/// more than `margin`, sits more than `margin` from the weight step, and
/// differs by more than `margin` along every axis.
pub fn has_clean_margins(pred: &[Vec3], gt: &[Vec3], w: &WeightFn, margin: f64) -> bool {
    let clean = |from: &[Vec3], to: &[Vec3]| {
        from.iter().all(|p| {
            let (j, d, second) = sorted_l1(*p, to);
            let diff = geom::sub(*p, to[j]);
            second - d > margin && libm::fabs(d - w.threshold) > margin && diff.iter().all(|c| libm::fabs(*c) > margin)
        })
    };
    clean(pred, gt) && clean(gt, pred)
}

/// Central differences of [`brute_chamfer`] with respect to each predicted
/// coordinate.
pub fn finite_difference_gradient(pred: &[Vec3], gt: &[Vec3], w: &WeightFn, h: f64) -> Vec<Vec3> {
    let mut work = pred.to_vec();
    let mut out = vec![[0.0; 3]; pred.len()];
    for i in 0..pred.len() {
        for a in 0..3 {
            let x = pred[i][a];
            work[i][a] = x + h;
            let up = brute_chamfer(&work, gt, w);
            work[i][a] = x - h;
            let down = brute_chamfer(&work, gt, w);
            work[i][a] = x;
            out[i][a] = (up - down) / (2.0 * h);
        }
    }
    out
}

/// Largest `|a - f| / max(|a|, |f|, 1e-6)` over all components.
pub fn max_relative_error(analytic: &[Vec3], numeric: &[Vec3]) -> f64 {
    analytic
        .iter()
        .flatten()
        .zip(numeric.iter().flatten())
        .map(|(a, f)| libm::fabs(a - f) / libm::fabs(*a).max(libm::fabs(*f)).max(1e-6))
        .fold(0.0, f64::max)
}

/// Expected plain Chamfer distance after adding `N(0, std^2)` to each
/// coordinate of a sparse set: three axes, two directions, `E|N| = std·√(2/π)`.
pub fn jitter_chamfer_expectation(std: f64) -> f64 {
    6.0 * std * libm::sqrt(2.0 / core::f64::consts::PI)
}

/// Per-voxel class histogram, majority with lowest-id ties.
pub fn tally_voxels(points: &LabeledPointSet, cfg: &SceneConfig) -> (VoxelGrid, usize) {
    let mut grid = cfg.empty_grid();
    let (o, vs, dims) = (cfg.roi_min(), cfg.voxel_size(), cfg.dims());
    let mut hist: HashMap<[i64; 3], HashMap<ClassId, usize>> = HashMap::new();
    let mut dropped = 0;
    for (p, c) in points.positions().iter().zip(points.classes().expect("labeled")) {
        let key: [i64; 3] = core::array::from_fn(|a| libm::floor((p[a] - o[a]) / vs) as i64);
        if (0..3).any(|a| key[a] < 0 || key[a] >= dims[a] as i64) {
            dropped += 1;
            continue;
        }
        *hist.entry(key).or_default().entry(*c).or_default() += 1;
    }
    for (key, h) in hist {
        let best = h
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(c, _)| *c)
            .unwrap();
        grid.set([key[0] as usize, key[1] as usize, key[2] as usize], best);
    }
    (grid, dropped)
}

/// mIoU from a full confusion matrix with the free label as an extra row
/// and column.
pub fn confusion_miou(
    pred: &VoxelGrid,
    gt: &VoxelGrid,
    mask: Option<&[bool]>,
    num_semantic: usize,
    free: ClassId,
) -> f64 {
    let k = num_semantic + 1;
    let slot = |c: ClassId| if c == free { num_semantic } else { c as usize };
    let mut m = vec![vec![0u64; k]; k];
    for (i, (p, g)) in pred.labels().iter().zip(gt.labels()).enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        m[slot(*p)][slot(*g)] += 1;
    }
    let mut ious = Vec::new();
    for c in 0..num_semantic {
        let row: u64 = m[c].iter().sum();
        let col: u64 = (0..k).map(|r| m[r][c]).sum();
        let union = row + col - m[c][c];
        if union > 0 {
            ious.push(m[c][c] as f64 / union as f64);
        }
    }
    if ious.is_empty() {
        1.0
    } else {
        ious.iter().sum::<f64>() / ious.len() as f64
    }
}

/// First occupied voxel found by stepping `step` meters at a time.
pub fn march_ray(grid: &VoxelGrid, free: ClassId, origin: Vec3, dir: Vec3, max_range: f64, step: f64) -> Option<usize> {
    let mut t = 0.0;
    while t <= max_range {
        if let Some(ijk) = grid.voxel_of(geom::add(origin, geom::scale(dir, t))) {
            let idx = grid.index(ijk);
            if grid.labels()[idx] != free {
                return Some(idx);
            }
        }
        t += step;
    }
    None
}

/// Ray parameters `(t_in, t_out)` over which the ray lies inside voxel
/// `ijk`; empty when `t_in >= t_out`.
pub fn voxel_interval(grid: &VoxelGrid, ijk: [usize; 3], origin: Vec3, dir: Vec3) -> (f64, f64) {
    let vs = grid.voxel_size();
    let lo = geom::sub(grid.center(ijk), [0.5 * vs; 3]);
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for a in 0..3 {
        let hi = lo[a] + vs;
        if dir[a] == 0.0 {
            if origin[a] < lo[a] || origin[a] >= hi {
                return (1.0, 0.0);
            }
        } else {
            let (mut x, mut y) = ((lo[a] - origin[a]) / dir[a], (hi - origin[a]) / dir[a]);
            if x > y {
                core::mem::swap(&mut x, &mut y);
            }
            t0 = t0.max(x);
            t1 = t1.min(y);
        }
    }
    (t0, t1)
}

/// Occupied voxel with the smallest entry parameter among all voxels the
/// ray passes through within `[0, max_range]`, and that parameter.
pub fn first_pierced_occupied(
    grid: &VoxelGrid,
    free: ClassId,
    origin: Vec3,
    dir: Vec3,
    max_range: f64,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, &label) in grid.labels().iter().enumerate() {
        if label == free {
            continue;
        }
        let (t0, t1) = voxel_interval(grid, grid.coords(idx), origin, dir);
        let (t0, t1) = (t0.max(0.0), t1.min(max_range));
        if t0 < t1 && best.is_none_or(|(_, b)| t0 < b) {
            best = Some((idx, t0));
        }
    }
    best
}

/// Visibility by intersecting every pixel ray with every voxel box: a
/// pierced voxel is visible when it is entered no later than the nearest
/// pierced occupied voxel.
pub fn line_of_sight_mask(
    grid: &VoxelGrid,
    cam: &CameraModel,
    stride: usize,
    max_range: f64,
    free: ClassId,
) -> Vec<bool> {
    let center = cam.center().expect("finite camera center");
    let mut vis = vec![false; grid.len()];
    for v in (0..cam.height()).step_by(stride) {
        for u in (0..cam.width()).step_by(stride) {
            let Some(dir) = cam.pixel_ray(u as f64, v as f64) else {
                continue;
            };
            let spans: Vec<Option<f64>> = (0..grid.len())
                .map(|idx| {
                    let (t0, t1) = voxel_interval(grid, grid.coords(idx), center, dir);
                    let (t0, t1) = (t0.max(0.0), t1.min(max_range));
                    (t0 < t1).then_some(t0)
                })
                .collect();
            let hit = spans
                .iter()
                .enumerate()
                .filter(|(idx, s)| s.is_some() && grid.labels()[*idx] != free)
                .map(|(_, s)| s.unwrap())
                .fold(f64::INFINITY, f64::min);
            for (idx, s) in spans.iter().enumerate() {
                if s.is_some_and(|t0| t0 <= hit) {
                    vis[idx] = true;
                }
            }
        }
    }
    vis
}

/// A wall of class 4 across the grid and a copy pushed `shift` meters
/// farther along +x, probed by an `n x n` bundle of +x rays. Returns
/// `(pred, gt, rays)`; every ray's predicted depth exceeds the true depth by
/// exactly `shift`.
pub fn depth_offset_slab_scene(shift: f64, n: usize) -> (VoxelGrid, VoxelGrid, RaySet) {
    let vs = 0.5;
    let steps = libm::round(shift / vs) as usize;
    assert!(
        libm::fabs(steps as f64 * vs - shift) < 1e-12,
        "shift must be a multiple of the voxel size"
    );
    let dims = [40, 8, 8];
    let origin = [0.0, -2.0, -2.0];
    let wall = |x: usize| {
        let mut g = VoxelGrid::filled(origin, vs, dims, 17).unwrap();
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                g.set([x, j, k], 4);
            }
        }
        g
    };
    let gt = wall(20);
    let pred = wall(20 + steps);
    let mut origins = Vec::new();
    for j in 0..n {
        for k in 0..n {
            let y = -1.9 + 3.8 * (j as f64 + 0.5) / n as f64;
            let z = -1.9 + 3.8 * (k as f64 + 0.5) / n as f64;
            origins.push([0.25, y, z]);
        }
    }
    let dirs = vec![[1.0, 0.0, 0.0]; origins.len()];
    (pred, gt, RaySet::new(origins, dirs, 19.0).unwrap())
}
