//! Set-prediction kernels for sparse 3D occupancy.
//!
//! The crate treats an occupancy scene as an unordered set of voxel centers
//! with class ids and provides everything needed to supervise and evaluate
//! point-set predictions against it:
//!
//! - [`matching`]: L1 Chamfer distance (plain and step re-weighted) with
//!   analytic gradients, L2 nearest-neighbor label assignment, an exact grid
//!   nearest-neighbor index and a shortest-augmenting-path assignment solver
//!   used as the one-to-one baseline.
//! - [`losses`]: re-weighted focal loss, initial point layouts, per-stage
//!   point refinement and the multi-stage training objective.
//! - [`sampling`]: query-conditioned sample points, camera projection with
//!   visibility masks, bilinear feature lookup and masked aggregation.
//! - [`metrics`]: voxelization, voxel mIoU, voxel ray traversal, RayIoU and
//!   camera visibility masks.
//! - [`synth`]: deterministic synthetic scenes and controlled perturbations.
//!
//! The crate is `no_std` (it needs `alloc`). The `parallel` feature pulls in
//! `std` and rayon; parallel paths produce bit-identical results to the
//! sequential ones because every reduction runs in index order.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(rust_2018_idioms)]
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments
)]

extern crate alloc;

mod error;
pub mod geom;
pub mod losses;
pub mod matching;
pub mod metrics;
mod par;
pub mod sampling;
pub mod synth;
pub mod types;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use error::{Error, Result};
pub use geom::Vec3;
pub use types::{validate, ClassId, ClassTaxonomy, LabeledPointSet, SceneConfig, StageSchedule, VoxelGrid};
