//! Occupancy evaluation: voxelization, voxel mIoU, ray traversal, RayIoU and
//! camera visibility masks.

mod occupancy;
mod raycast;
mod rayiou;
mod visibility;

pub use occupancy::{miou, voxelize, ClassCounts, ClassIou, MiouReport, VoxelMask, Voxelized};
pub use raycast::{cast_ray, RayHit, RaySet, VoxelStep, VoxelWalk};
pub use rayiou::{cast_pairs, rayiou, RayIouReport, ThresholdScore};
pub use visibility::visibility_mask;
