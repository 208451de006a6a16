//! Voxelization of labeled points and voxel-wise mIoU.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::types::{ClassId, ClassTaxonomy, LabeledPointSet, SceneConfig, VoxelGrid};

/// Boolean grid aligned with a [`VoxelGrid`], x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMask {
    dims: [usize; 3],
    bits: Vec<bool>,
}

impl VoxelMask {
    pub fn new(dims: [usize; 3], bits: Vec<bool>) -> Result<Self> {
        let n = dims[0] * dims[1] * dims[2];
        if bits.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: bits.len(),
            });
        }
        Ok(Self { dims, bits })
    }

    pub fn all(dims: [usize; 3], value: bool) -> Self {
        Self {
            dims,
            bits: alloc::vec![value; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn set(&mut self, index: usize) {
        self.bits[index] = true;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Ors `other` into `self`.
    pub fn union_with(&mut self, other: &VoxelMask) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Voxelized {
    pub grid: VoxelGrid,
    /// Points outside the region of interest.
    pub dropped: usize,
}

/// Majority class per voxel (ties to the lowest class id); voxels without
/// points stay free.
pub fn voxelize(points: &LabeledPointSet, cfg: &SceneConfig) -> Result<Voxelized> {
    let classes = points.classes().ok_or(Error::MissingLabels)?;
    let mut grid = cfg.empty_grid();
    let mut tagged: Vec<(usize, ClassId)> = Vec::with_capacity(points.len());
    let mut dropped = 0;
    for (p, &c) in points.positions().iter().zip(classes) {
        match grid.voxel_of(*p) {
            Some(ijk) => tagged.push((grid.index(ijk), c)),
            None => dropped += 1,
        }
    }
    tagged.sort_unstable();

    let mut i = 0;
    while i < tagged.len() {
        let voxel = tagged[i].0;
        let (mut best_class, mut best_count) = (tagged[i].1, 0usize);
        while i < tagged.len() && tagged[i].0 == voxel {
            let class = tagged[i].1;
            let mut run = 0;
            while i < tagged.len() && tagged[i] == (voxel, class) {
                run += 1;
                i += 1;
            }
            // Classes arrive ascending, so strict > keeps the lowest on ties.
            if run > best_count {
                best_count = run;
                best_class = class;
            }
        }
        let ijk = grid.coords(voxel);
        grid.set(ijk, best_class);
    }
    Ok(Voxelized { grid, dropped })
}

/// True/false positive and false negative counts for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ClassCounts {
    pub fn is_present(&self) -> bool {
        self.tp + self.fp + self.fn_ > 0
    }

    pub fn iou(&self) -> Option<f64> {
        self.is_present()
            .then(|| self.tp as f64 / (self.tp + self.fp + self.fn_) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassIou {
    pub class_id: ClassId,
    pub counts: ClassCounts,
    /// `None` when the class is absent from both prediction and truth.
    pub iou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiouReport {
    pub per_class: Vec<ClassIou>,
    /// Mean over present semantic classes; 1 when no class is present on
    /// either side.
    pub miou: f64,
    pub evaluated_voxels: u64,
}

/// Voxel-wise per-class IoU over masked voxels, averaged over semantic
/// classes present in the prediction or the truth.
pub fn miou(
    pred: &VoxelGrid,
    gt: &VoxelGrid,
    mask: Option<&VoxelMask>,
    taxonomy: &ClassTaxonomy,
) -> Result<MiouReport> {
    if !pred.is_aligned_with(gt) {
        return Err(Error::GridMismatch);
    }
    if let Some(m) = mask {
        if m.dims() != gt.dims() {
            return Err(Error::GridMismatch);
        }
    }
    let n = taxonomy.num_semantic() as usize;
    let free = taxonomy.free_id();
    let mut counts = alloc::vec![ClassCounts::default(); n];
    let mut evaluated = 0u64;
    for (idx, (&p, &g)) in pred.labels().iter().zip(gt.labels()).enumerate() {
        if mask.is_some_and(|m| !m.get(idx)) {
            continue;
        }
        evaluated += 1;
        if p == g {
            if p != free {
                counts.get_mut(p as usize).ok_or(Error::InvalidClassId(p))?.tp += 1;
            }
            continue;
        }
        if p != free {
            counts.get_mut(p as usize).ok_or(Error::InvalidClassId(p))?.fp += 1;
        }
        if g != free {
            counts.get_mut(g as usize).ok_or(Error::InvalidClassId(g))?.fn_ += 1;
        }
    }
    let per_class: Vec<ClassIou> = counts
        .iter()
        .enumerate()
        .map(|(c, k)| ClassIou {
            class_id: c as ClassId,
            counts: *k,
            iou: k.iou(),
        })
        .collect();
    Ok(MiouReport {
        miou: mean_present(per_class.iter().map(|c| c.iou)),
        per_class,
        evaluated_voxels: evaluated,
    })
}

pub(crate) fn mean_present(values: impl Iterator<Item = Option<f64>>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.flatten() {
        sum += v;
        n += 1;
    }
    if n == 0 {
        1.0
    } else {
        sum / n as f64
    }
}
