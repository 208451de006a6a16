//! Camera visibility masks.

use alloc::vec::Vec;

use super::occupancy::VoxelMask;
use super::raycast::VoxelWalk;
use crate::error::{Error, Result};
use crate::par::map_indices;
use crate::sampling::CameraModel;
use crate::types::{ClassId, VoxelGrid};

/// Voxels seen by at least one camera: one ray per `stride`-th pixel from the
/// camera center, marking every traversed voxel up to and including the
/// first occupied one, within `max_range`.
pub fn visibility_mask(
    gt: &VoxelGrid,
    cams: &[CameraModel],
    stride: usize,
    max_range: f64,
    free_id: ClassId,
) -> Result<VoxelMask> {
    if cams.is_empty() {
        return Err(Error::InvalidParameter("at least one camera is required"));
    }
    if stride == 0 || !(max_range > 0.0) {
        return Err(Error::InvalidParameter("stride and max range must be positive"));
    }
    let mut mask = VoxelMask::all(gt.dims(), false);
    for cam in cams {
        let center = cam
            .center()
            .ok_or(Error::InvalidParameter("camera has no finite center"))?;
        let us: Vec<usize> = (0..cam.width()).step_by(stride).collect();
        let vs: Vec<usize> = (0..cam.height()).step_by(stride).collect();
        let rows = map_indices(vs.len(), |r| {
            let mut seen = Vec::new();
            for &u in &us {
                let Some(dir) = cam.pixel_ray(u as f64, vs[r] as f64) else {
                    continue;
                };
                for step in VoxelWalk::new(gt, center, dir, max_range) {
                    let idx = gt.index(step.ijk);
                    seen.push(idx);
                    if gt.labels()[idx] != free_id {
                        break;
                    }
                }
            }
            seen
        });
        for idx in rows.into_iter().flatten() {
            mask.set(idx);
        }
    }
    Ok(mask)
}
