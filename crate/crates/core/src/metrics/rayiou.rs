//! Ray-based IoU: first-hit class and depth agreement along query rays.

use alloc::vec::Vec;

use super::occupancy::{mean_present, ClassCounts};
use super::raycast::{cast_ray, RayHit, RaySet};
use crate::error::{Error, Result};
use crate::par::map_indices;
use crate::types::{ClassId, ClassTaxonomy, VoxelGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScore {
    pub threshold: f64,
    pub score: f64,
    /// Per semantic class, indexed by class id.
    pub counts: Vec<ClassCounts>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayIouReport {
    pub per_threshold: Vec<ThresholdScore>,
    pub mean: f64,
    pub rays: usize,
}

/// Both grids' first hits for every ray.
pub fn cast_pairs(pred: &VoxelGrid, gt: &VoxelGrid, rays: &RaySet, free_id: ClassId) -> Vec<(RayHit, RayHit)> {
    map_indices(rays.len(), |i| {
        let (o, d, r) = (rays.origin(i), rays.direction(i), rays.max_range());
        (cast_ray(pred, free_id, o, d, r), cast_ray(gt, free_id, o, d, r))
    })
}

/// A ray is a true positive for class `c` when both grids hit class `c` with
/// depths within the threshold. Any other predicted hit is a false positive
/// for its class and any other true hit a false negative for its class.
/// Per-class ray IoU is averaged over semantic classes present on either
/// side, then over thresholds.
pub fn rayiou(
    pred: &VoxelGrid,
    gt: &VoxelGrid,
    rays: &RaySet,
    thresholds: &[f64],
    taxonomy: &ClassTaxonomy,
) -> Result<RayIouReport> {
    if !pred.is_aligned_with(gt) {
        return Err(Error::GridMismatch);
    }
    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter("thresholds must be positive"));
    }
    let free = taxonomy.free_id();
    let n = taxonomy.num_semantic() as usize;
    let pairs = cast_pairs(pred, gt, rays, free);
    for (p, g) in &pairs {
        for h in [p, g] {
            if h.hit && h.class_id as usize >= n {
                return Err(Error::InvalidClassId(h.class_id));
            }
        }
    }

    let per_threshold: Vec<ThresholdScore> = thresholds
        .iter()
        .map(|&t| {
            let mut counts = alloc::vec![ClassCounts::default(); n];
            for (p, g) in &pairs {
                match (p.hit, g.hit) {
                    (true, true) if p.class_id == g.class_id && libm::fabs(p.depth - g.depth) <= t => {
                        counts[p.class_id as usize].tp += 1;
                    }
                    _ => {
                        if p.hit {
                            counts[p.class_id as usize].fp += 1;
                        }
                        if g.hit {
                            counts[g.class_id as usize].fn_ += 1;
                        }
                    }
                }
            }
            ThresholdScore {
                threshold: t,
                score: mean_present(counts.iter().map(|c| c.iou())),
                counts,
            }
        })
        .collect();
    let mean = per_threshold.iter().map(|s| s.score).sum::<f64>() / per_threshold.len() as f64;
    Ok(RayIouReport {
        per_threshold,
        mean,
        rays: rays.len(),
    })
}
