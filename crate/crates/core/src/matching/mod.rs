//! Set-to-set matching: Chamfer distance and its gradient, nearest-neighbor
//! label assignment, and the one-to-one assignment baseline.

mod chamfer;
mod hungarian;
mod nn;

pub use chamfer::{
    assign_labels, chamfer_distance, chamfer_distance_reweighted, chamfer_gradient, gradient_from_matches,
    reweighted_sum, CellSize, MatchReport, Matcher, WeightFn,
};
pub use hungarian::{hungarian_match, hungarian_match_points, Assignment, CostMatrix, DenseCost, PairwiseCost};
pub use nn::{auto_cell_size, Metric, Neighbor, NnIndex};

/// Convenience alias for [`NnIndex::build`].
pub fn build_nn_index(points: &[crate::Vec3], cell_size: f64) -> crate::Result<NnIndex> {
    NnIndex::build(points, cell_size)
}
