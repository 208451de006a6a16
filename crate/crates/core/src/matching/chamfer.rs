//! Chamfer distance between point sets, its step re-weighted variant, the
//! analytic gradient with respect to predicted positions, and
//! nearest-neighbor class assignment.
//!
//! Distances inside the Chamfer terms are L1; class assignment uses L2.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::matching::nn::{Metric, Neighbor, NnIndex};
use crate::par::map_indices;
use crate::types::{ClassId, LabeledPointSet};

/// Piecewise-constant weight: `high_weight` when `d >= threshold`, else
/// `low_weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFn {
    pub threshold: f64,
    pub high_weight: f64,
    pub low_weight: f64,
}

impl WeightFn {
    pub const fn new(threshold: f64, high_weight: f64, low_weight: f64) -> Self {
        Self {
            threshold,
            high_weight,
            low_weight,
        }
    }

    /// `W ≡ 1`; reduces the re-weighted distance to the plain one.
    pub const fn unit() -> Self {
        Self::new(0.0, 1.0, 1.0)
    }

    #[inline]
    pub fn weight(&self, d: f64) -> f64 {
        if d >= self.threshold {
            self.high_weight
        } else {
            self.low_weight
        }
    }
}

impl Default for WeightFn {
    fn default() -> Self {
        Self::new(0.2, 5.0, 1.0)
    }
}

/// How the matcher sizes its grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CellSize {
    /// About two points per cell of the indexed set's bounding box.
    #[default]
    Auto,
    Fixed(f64),
}

impl CellSize {
    pub fn build_index(self, points: &[Vec3]) -> Result<NnIndex> {
        match self {
            CellSize::Auto => NnIndex::build_auto(points),
            CellSize::Fixed(c) => NnIndex::build(points, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub cd_value: f64,
    /// L1 nearest ground-truth point of each prediction.
    pub per_pred_nn: Vec<Neighbor>,
    /// L1 nearest prediction of each ground-truth point.
    pub per_gt_nn: Vec<Neighbor>,
    /// Class of `per_pred_nn[i]`'s ground-truth point; `None` for unlabeled
    /// ground truth.
    pub assigned_classes: Option<Vec<ClassId>>,
}

/// Plain Chamfer distance, L1 nearest neighbors, automatic cell size.
pub fn chamfer_distance(pred: &LabeledPointSet, gt: &LabeledPointSet) -> Result<MatchReport> {
    chamfer_distance_reweighted(pred, gt, &WeightFn::unit())
}

pub fn chamfer_distance_reweighted(pred: &LabeledPointSet, gt: &LabeledPointSet, w: &WeightFn) -> Result<MatchReport> {
    Matcher::default().chamfer(pred, gt, w)
}

pub fn chamfer_gradient(pred: &LabeledPointSet, gt: &LabeledPointSet, w: &WeightFn) -> Result<Vec<Vec3>> {
    Matcher::default().gradient(pred, gt, w)
}

/// Class of each prediction's L2-nearest ground-truth point.
pub fn assign_labels(pred: &LabeledPointSet, gt: &LabeledPointSet) -> Result<Vec<ClassId>> {
    Matcher::default().assign_labels(pred, gt)
}

/// Matching kernels with a configurable index cell size.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Matcher {
    pub cell_size: CellSize,
}

impl Matcher {
    pub fn with_cell_size(cell_size: f64) -> Self {
        Self {
            cell_size: CellSize::Fixed(cell_size),
        }
    }

    /// Both nearest-neighbor directions under `metric`.
    pub fn bidirectional_nn(
        &self,
        pred: &[Vec3],
        gt: &[Vec3],
        metric: Metric,
    ) -> Result<(Vec<Neighbor>, Vec<Neighbor>)> {
        if pred.is_empty() || gt.is_empty() {
            return Err(Error::EmptySet);
        }
        let gt_index = self.cell_size.build_index(gt)?;
        let pred_index = self.cell_size.build_index(pred)?;
        let per_pred = map_indices(pred.len(), |i| gt_index.nearest(pred[i], metric));
        let per_gt = map_indices(gt.len(), |j| pred_index.nearest(gt[j], metric));
        Ok((per_pred, per_gt))
    }

    pub fn chamfer(&self, pred: &LabeledPointSet, gt: &LabeledPointSet, w: &WeightFn) -> Result<MatchReport> {
        let (per_pred_nn, per_gt_nn) = self.bidirectional_nn(pred.positions(), gt.positions(), Metric::L1)?;
        let cd_value = reweighted_sum(&per_pred_nn, &per_gt_nn, w);
        let assigned_classes = gt
            .classes()
            .map(|classes| per_pred_nn.iter().map(|n| classes[n.index]).collect());
        Ok(MatchReport {
            cd_value,
            per_pred_nn,
            per_gt_nn,
            assigned_classes,
        })
    }

    /// Gradient of the re-weighted Chamfer distance with respect to each
    /// predicted position. Weights are held constant (no gradient through the
    /// step) and `sign(0)` is taken as 0.
    pub fn gradient(&self, pred: &LabeledPointSet, gt: &LabeledPointSet, w: &WeightFn) -> Result<Vec<Vec3>> {
        let (per_pred, per_gt) = self.bidirectional_nn(pred.positions(), gt.positions(), Metric::L1)?;
        Ok(gradient_from_matches(
            pred.positions(),
            gt.positions(),
            &per_pred,
            &per_gt,
            w,
        ))
    }

    pub fn assign_labels(&self, pred: &LabeledPointSet, gt: &LabeledPointSet) -> Result<Vec<ClassId>> {
        let classes = gt.classes().ok_or(Error::MissingLabels)?;
        if pred.is_empty() || gt.is_empty() {
            return Err(Error::EmptySet);
        }
        let index = self.cell_size.build_index(gt.positions())?;
        let p = pred.positions();
        Ok(map_indices(p.len(), |i| classes[index.nearest(p[i], Metric::L2).index]))
    }
}

/// `(1/|P|) Σ W(d)·d + (1/|G|) Σ W(d)·d`, summed in index order.
pub fn reweighted_sum(per_pred: &[Neighbor], per_gt: &[Neighbor], w: &WeightFn) -> f64 {
    let directional = |nn: &[Neighbor]| {
        let mut s = 0.0;
        for n in nn {
            s += w.weight(n.distance) * n.distance;
        }
        s / nn.len() as f64
    };
    directional(per_pred) + directional(per_gt)
}

pub fn gradient_from_matches(
    pred: &[Vec3],
    gt: &[Vec3],
    per_pred: &[Neighbor],
    per_gt: &[Neighbor],
    w: &WeightFn,
) -> Vec<Vec3> {
    let inv_p = 1.0 / pred.len() as f64;
    let inv_g = 1.0 / gt.len() as f64;
    let mut grad = vec![[0.0; 3]; pred.len()];
    for (i, n) in per_pred.iter().enumerate() {
        let d = geom::sub(pred[i], gt[n.index]);
        let k = w.weight(n.distance) * inv_p;
        for a in 0..3 {
            grad[i][a] += k * geom::signum0(d[a]);
        }
    }
    for (j, n) in per_gt.iter().enumerate() {
        let d = geom::sub(gt[j], pred[n.index]);
        let k = w.weight(n.distance) * inv_g;
        for a in 0..3 {
            grad[n.index][a] -= k * geom::signum0(d[a]);
        }
    }
    grad
}
