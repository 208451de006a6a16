//! Synthetic ground-truth scenes and controlled perturbations.
//!
//! Scenes are rasterized from simple primitives onto the configured grid.
//! Ground-truth points are the centers of occupied voxels, listed in grid
//! index order. Everything is a pure function of the seed.

use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::par::map_indices;
use crate::types::{ClassId, ClassTaxonomy, LabeledPointSet, SceneConfig, VoxelGrid};

const ROI_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveKind {
    /// Axis-aligned box.
    Box,
    /// Horizontal slab spanning the full ROI in x and y; only the z extent
    /// is used.
    PlaneSlab,
    /// One-voxel-thick ellipsoid shell with semi-axes `extents / 2`.
    SphereShell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenePrimitive {
    pub kind: PrimitiveKind,
    pub center: Vec3,
    pub extents: Vec3,
    pub class_id: ClassId,
    /// Points per cubic meter; each voxel is kept with probability
    /// `min(1, density * voxel_size^3)`.
    pub fill_density: f64,
}

impl ScenePrimitive {
    pub fn new(kind: PrimitiveKind, center: Vec3, extents: Vec3, class_id: ClassId, fill_density: f64) -> Self {
        Self {
            kind,
            center,
            extents,
            class_id,
            fill_density,
        }
    }

    fn lo(&self) -> Vec3 {
        core::array::from_fn(|a| self.center[a] - 0.5 * self.extents[a])
    }

    fn hi(&self) -> Vec3 {
        core::array::from_fn(|a| self.center[a] + 0.5 * self.extents[a])
    }

    fn check(&self, index: usize, cfg: &SceneConfig) -> Result<()> {
        if self.extents.iter().any(|e| !(*e > 0.0)) || !(self.fill_density > 0.0) {
            return Err(Error::InvalidParameter(
                "primitive extents and density must be positive",
            ));
        }
        if !cfg.taxonomy().is_semantic(self.class_id) {
            return Err(Error::InvalidClassId(self.class_id));
        }
        let (lo, hi) = (self.lo(), self.hi());
        let (rmin, rmax) = (cfg.roi_min(), cfg.roi_max());
        let axes: &[usize] = match self.kind {
            PrimitiveKind::PlaneSlab => &[2],
            _ => &[0, 1, 2],
        };
        for &a in axes {
            if lo[a] < rmin[a] - ROI_TOLERANCE || hi[a] > rmax[a] + ROI_TOLERANCE {
                return Err(Error::PrimitiveOutOfRoi(index));
            }
        }
        Ok(())
    }

    fn contains(&self, c: Vec3, voxel_size: f64) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        match self.kind {
            PrimitiveKind::Box => (0..3).all(|a| c[a] >= lo[a] && c[a] < hi[a]),
            PrimitiveKind::PlaneSlab => c[2] >= lo[2] && c[2] < hi[2],
            PrimitiveKind::SphereShell => {
                let inside = |p: Vec3| {
                    let r: f64 = (0..3)
                        .map(|a| {
                            let t = (p[a] - self.center[a]) / (0.5 * self.extents[a]);
                            t * t
                        })
                        .sum();
                    r <= 1.0
                };
                if !inside(c) {
                    return false;
                }
                (0..3).any(|a| {
                    [-1.0, 1.0].iter().any(|s| {
                        let mut n = c;
                        n[a] += s * voxel_size;
                        !inside(n)
                    })
                })
            }
        }
    }

    /// Flat indices this primitive labels, ascending.
    fn rasterize(&self, grid: &VoxelGrid, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let vs = grid.voxel_size();
        let keep = (self.fill_density * vs * vs * vs).min(1.0);
        let dims = grid.dims();
        let origin = grid.origin();
        let (lo, hi) = (self.lo(), self.hi());
        let range = |a: usize| -> (usize, usize) {
            if self.kind == PrimitiveKind::PlaneSlab && a < 2 {
                return (0, dims[a]);
            }
            let first = libm::floor((lo[a] - origin[a]) / vs - 1.0).max(0.0) as usize;
            let last = (libm::ceil((hi[a] - origin[a]) / vs + 1.0).max(0.0) as usize).min(dims[a]);
            (first.min(dims[a]), last)
        };
        let (rx, ry, rz) = (range(0), range(1), range(2));
        let mut out = Vec::new();
        for k in rz.0..rz.1 {
            for j in ry.0..ry.1 {
                for i in rx.0..rx.1 {
                    if self.contains(grid.center([i, j, k]), vs) && (keep >= 1.0 || rng.random::<f64>() < keep) {
                        out.push(grid.index([i, j, k]));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub points: LabeledPointSet,
    pub grid: VoxelGrid,
}

/// Rasterizes primitives in list order (later primitives overwrite earlier
/// ones). Primitive `i` draws from stream `i` of a generator seeded with
/// `cfg.seed()`.
pub fn generate_scene(primitives: &[ScenePrimitive], cfg: &SceneConfig) -> Result<Scene> {
    for (i, p) in primitives.iter().enumerate() {
        p.check(i, cfg)?;
    }
    let mut grid = cfg.empty_grid();
    let layers = map_indices(primitives.len(), |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
        rng.set_stream(i as u64);
        primitives[i].rasterize(&grid, &mut rng)
    });
    for (p, layer) in primitives.iter().zip(layers) {
        for idx in layer {
            let ijk = grid.coords(idx);
            grid.set(ijk, p.class_id);
        }
    }
    let free = cfg.taxonomy().free_id();
    let (mut pos, mut cls) = (Vec::new(), Vec::new());
    for (idx, &l) in grid.labels().iter().enumerate() {
        if l != free {
            pos.push(grid.center(grid.coords(idx)));
            cls.push(l);
        }
    }
    let points = LabeledPointSet::labeled(pos, cls)?;
    Ok(Scene { points, grid })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerturbParams {
    /// Standard deviation of per-coordinate Gaussian jitter, meters.
    pub noise_std: f64,
    pub drop_frac: f64,
    pub class_flip_frac: f64,
}

/// Drops `round(drop_frac * n)` points, jitters the rest, then reassigns
/// `round(class_flip_frac * kept)` labels to a different semantic class.
/// Surviving points keep their relative order.
pub fn perturb(
    gt: &LabeledPointSet,
    params: &PerturbParams,
    taxonomy: &ClassTaxonomy,
    seed: u64,
) -> Result<LabeledPointSet> {
    let in_unit = |f: f64| (0.0..=1.0).contains(&f);
    if !in_unit(params.drop_frac) || !in_unit(params.class_flip_frac) {
        return Err(Error::InvalidParameter("fractions must lie in [0, 1]"));
    }
    if !(params.noise_std >= 0.0) || !params.noise_std.is_finite() {
        return Err(Error::InvalidParameter("noise std must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = gt.len();

    let n_drop = libm::round(params.drop_frac * n as f64) as usize;
    let mut dropped = alloc::vec![false; n];
    for i in index::sample(&mut rng, n, n_drop.min(n)).iter() {
        dropped[i] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|i| !dropped[*i]).collect();

    let mut positions: Vec<Vec3> = kept.iter().map(|&i| gt.positions()[i]).collect();
    if params.noise_std > 0.0 {
        let normal = Normal::new(0.0, params.noise_std).map_err(|_| Error::InvalidParameter("noise std"))?;
        for p in &mut positions {
            for c in p.iter_mut() {
                *c += normal.sample(&mut rng);
            }
        }
    }

    let Some(classes) = gt.classes() else {
        if params.class_flip_frac > 0.0 {
            return Err(Error::MissingLabels);
        }
        return Ok(LabeledPointSet::new(positions));
    };
    let mut labels: Vec<ClassId> = kept.iter().map(|&i| classes[i]).collect();
    let n_flip = libm::round(params.class_flip_frac * labels.len() as f64) as usize;
    if n_flip > 0 {
        let k = taxonomy.num_semantic();
        if k < 2 {
            return Err(Error::InvalidParameter("flipping needs at least two classes"));
        }
        for i in index::sample(&mut rng, labels.len(), n_flip.min(labels.len())).iter() {
            let draw = rng.random_range(0..k - 1);
            labels[i] = if draw >= labels[i] { draw + 1 } else { draw };
        }
    }
    LabeledPointSet::labeled(positions, labels)
}
