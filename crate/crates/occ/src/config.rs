//! JSON inputs: scene primitives, cameras, class weights and sample queries.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sparse_occ_core::losses::ClassWeights;
use sparse_occ_core::sampling::CameraModel;
use sparse_occ_core::synth::{PrimitiveKind, ScenePrimitive};
use sparse_occ_core::{ClassId, ClassTaxonomy, SceneConfig, Vec3};

pub const DEFAULT_ROI_MIN: Vec3 = [-40.0, -40.0, -1.0];
pub const DEFAULT_ROI_MAX: Vec3 = [40.0, 40.0, 5.4];
pub const DEFAULT_VOXEL_SIZE: f64 = 0.4;

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    Box,
    PlaneSlab,
    SphereShell,
}

impl From<KindName> for PrimitiveKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::Box => PrimitiveKind::Box,
            KindName::PlaneSlab => PrimitiveKind::PlaneSlab,
            KindName::SphereShell => PrimitiveKind::SphereShell,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveDesc {
    pub kind: KindName,
    pub center: Vec3,
    pub extents: Vec3,
    pub class_id: ClassId,
    /// Points per cubic meter; omitted means fully filled.
    #[serde(default)]
    pub fill_density: Option<f64>,
}

/// Scene description read by `synth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDesc {
    #[serde(default = "default_roi_min")]
    pub roi_min: Vec3,
    #[serde(default = "default_roi_max")]
    pub roi_max: Vec3,
    #[serde(default = "default_voxel_size")]
    pub voxel_size: f64,
    pub primitives: Vec<PrimitiveDesc>,
}

fn default_roi_min() -> Vec3 {
    DEFAULT_ROI_MIN
}

fn default_roi_max() -> Vec3 {
    DEFAULT_ROI_MAX
}

fn default_voxel_size() -> f64 {
    DEFAULT_VOXEL_SIZE
}

impl SceneDesc {
    pub fn scene_config(&self, seed: u64) -> Result<SceneConfig> {
        Ok(SceneConfig::new(
            self.roi_min,
            self.roi_max,
            self.voxel_size,
            ClassTaxonomy::occ3d(),
            seed,
        )?)
    }

    pub fn primitives(&self) -> Vec<ScenePrimitive> {
        // A density of one point per voxel volume keeps every voxel.
        let full = 1.0 / self.voxel_size.powi(3);
        self.primitives
            .iter()
            .map(|p| {
                ScenePrimitive::new(
                    p.kind.into(),
                    p.center,
                    p.extents,
                    p.class_id,
                    p.fill_density.unwrap_or(full),
                )
            })
            .collect()
    }
}

/// A camera given either by intrinsics and pose or by a raw `3 x 4` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CameraDesc {
    Pinhole {
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        /// World-to-camera rotation, row-major.
        rotation: [[f64; 3]; 3],
        center: Vec3,
        width: usize,
        height: usize,
    },
    Matrix {
        projection: [[f64; 4]; 3],
        width: usize,
        height: usize,
    },
}

impl CameraDesc {
    pub fn build(&self) -> Result<CameraModel> {
        Ok(match *self {
            CameraDesc::Pinhole {
                fx,
                fy,
                cx,
                cy,
                rotation,
                center,
                width,
                height,
            } => CameraModel::pinhole(fx, fy, cx, cy, rotation, center, width, height)?,
            CameraDesc::Matrix {
                projection,
                width,
                height,
            } => CameraModel::new(projection, width, height)?,
        })
    }
}

pub fn load_cameras(path: &Path) -> Result<Vec<CameraModel>> {
    let descs: Vec<CameraDesc> = load_json(path)?;
    if descs.is_empty() {
        bail!("{} lists no cameras", path.display());
    }
    descs.iter().map(CameraDesc::build).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassWeightsDesc {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub weights: Vec<f64>,
}

fn default_gamma() -> f64 {
    2.0
}

impl ClassWeightsDesc {
    pub fn build(&self) -> Result<ClassWeights> {
        Ok(ClassWeights::new(self.weights.clone(), self.gamma)?)
    }
}

/// One query's points plus the sampling parameters used by `sample`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleQuery {
    pub points: Vec<Vec3>,
    pub offsets: Vec<Vec3>,
    /// `S x M` weights, sample-major; omitted means all ones.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma_min: Option<f64>,
    pub cameras: Vec<CameraDesc>,
}
