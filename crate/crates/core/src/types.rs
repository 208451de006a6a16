//! Domain types shared by every module: class taxonomy, labeled point sets,
//! dense voxel grids, coarse-to-fine schedules and scene configuration.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};

pub type ClassId = u16;

/// Semantic classes `0..num_semantic` plus one reserved "free" id.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTaxonomy {
    num_semantic: u16,
    free_id: ClassId,
    names: Option<Vec<String>>,
}

const OCC3D_NAMES: [&str; 17] = [
    "others",
    "barrier",
    "bicycle",
    "bus",
    "car",
    "construction_vehicle",
    "motorcycle",
    "pedestrian",
    "traffic_cone",
    "trailer",
    "truck",
    "driveable_surface",
    "other_flat",
    "sidewalk",
    "terrain",
    "manmade",
    "vegetation",
];

impl ClassTaxonomy {
    pub fn new(num_semantic: u16, free_id: ClassId) -> Result<Self> {
        if num_semantic == 0 {
            return Err(Error::InvalidParameter("taxonomy needs at least one semantic class"));
        }
        if free_id < num_semantic {
            return Err(Error::InvalidClassId(free_id));
        }
        Ok(Self {
            num_semantic,
            free_id,
            names: None,
        })
    }

    /// Taxonomy whose free id directly follows the semantic ids.
    pub fn with_semantic(num_semantic: u16) -> Result<Self> {
        Self::new(num_semantic, num_semantic)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_semantic as usize {
            return Err(Error::LengthMismatch {
                expected: self.num_semantic as usize,
                found: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    /// The 17 semantic classes of Occ3D-nuScenes, free id 17.
    pub fn occ3d() -> Self {
        Self {
            num_semantic: 17,
            free_id: 17,
            names: Some(OCC3D_NAMES.iter().map(|s| String::from(*s)).collect()),
        }
    }

    pub fn num_semantic(&self) -> u16 {
        self.num_semantic
    }

    pub fn free_id(&self) -> ClassId {
        self.free_id
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.names.as_ref()?.get(id as usize).map(String::as_str)
    }

    pub fn is_semantic(&self, id: ClassId) -> bool {
        id < self.num_semantic
    }

    /// Valid voxel label: semantic or free.
    pub fn is_label(&self, id: ClassId) -> bool {
        self.is_semantic(id) || id == self.free_id
    }
}

impl Default for ClassTaxonomy {
    fn default() -> Self {
        Self::occ3d()
    }
}

/// Unordered 3D points (meters) with optional per-point semantic class ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledPointSet {
    positions: Vec<Vec3>,
    classes: Option<Vec<ClassId>>,
}

impl LabeledPointSet {
    pub fn new(positions: Vec<Vec3>) -> Self {
        Self {
            positions,
            classes: None,
        }
    }

    pub fn labeled(positions: Vec<Vec3>, classes: Vec<ClassId>) -> Result<Self> {
        if classes.len() != positions.len() {
            return Err(Error::LengthMismatch {
                expected: positions.len(),
                found: classes.len(),
            });
        }
        Ok(Self {
            positions,
            classes: Some(classes),
        })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn classes(&self) -> Option<&[ClassId]> {
        self.classes.as_deref()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.classes.is_some()
    }

    pub fn into_parts(self) -> (Vec<Vec3>, Option<Vec<ClassId>>) {
        (self.positions, self.classes)
    }

    pub fn validate(&self, taxonomy: &ClassTaxonomy) -> Result<()> {
        validate(self, taxonomy)
    }
}

/// Checks the point-set invariants: matching label count, semantic class
/// ids only, finite coordinates.
pub fn validate(set: &LabeledPointSet, taxonomy: &ClassTaxonomy) -> Result<()> {
    if let Some(classes) = &set.classes {
        if classes.len() != set.positions.len() {
            return Err(Error::LengthMismatch {
                expected: set.positions.len(),
                found: classes.len(),
            });
        }
        if let Some(&bad) = classes.iter().find(|&&c| !taxonomy.is_semantic(c)) {
            return Err(Error::InvalidClassId(bad));
        }
    }
    if let Some(i) = set.positions.iter().position(|p| !geom::is_finite(*p)) {
        return Err(Error::NonFiniteCoordinate(i));
    }
    Ok(())
}

/// Dense axis-aligned grid of class labels, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    origin: Vec3,
    voxel_size: f64,
    dims: [usize; 3],
    labels: Vec<ClassId>,
}

impl VoxelGrid {
    pub fn new(origin: Vec3, voxel_size: f64, dims: [usize; 3], labels: Vec<ClassId>) -> Result<Self> {
        if !(voxel_size > 0.0) || !voxel_size.is_finite() {
            return Err(Error::InvalidParameter("voxel size must be positive"));
        }
        if !geom::is_finite(origin) {
            return Err(Error::NonFiniteCoordinate(0));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidParameter("grid dimensions must be positive"));
        }
        let expected = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or(Error::InvalidParameter("grid dimensions overflow"))?;
        if labels.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: labels.len(),
            });
        }
        Ok(Self {
            origin,
            voxel_size,
            dims,
            labels,
        })
    }

    pub fn filled(origin: Vec3, voxel_size: f64, dims: [usize; 3], label: ClassId) -> Result<Self> {
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(Error::InvalidParameter("grid dimensions overflow"))?;
        Self::new(origin, voxel_size, dims, vec![label; n])
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.dims[0] * (ijk[1] + self.dims[1] * ijk[2])
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let i = index % self.dims[0];
        let rest = index / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    #[inline]
    pub fn get(&self, ijk: [usize; 3]) -> ClassId {
        self.labels[self.index(ijk)]
    }

    #[inline]
    pub fn set(&mut self, ijk: [usize; 3], label: ClassId) {
        let idx = self.index(ijk);
        self.labels[idx] = label;
    }

    pub fn center(&self, ijk: [usize; 3]) -> Vec3 {
        let mut c = [0.0; 3];
        for a in 0..3 {
            c[a] = self.origin[a] + (ijk[a] as f64 + 0.5) * self.voxel_size;
        }
        c
    }

    /// Voxel containing `p` by `floor((p - origin) / voxel_size)`, if inside.
    pub fn voxel_of(&self, p: Vec3) -> Option<[usize; 3]> {
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let f = libm::floor((p[a] - self.origin[a]) / self.voxel_size);
            if !(f >= 0.0) || f >= self.dims[a] as f64 {
                return None;
            }
            ijk[a] = f as usize;
        }
        Some(ijk)
    }

    /// Maximum corner of the grid.
    pub fn extent_max(&self) -> Vec3 {
        let mut m = self.origin;
        for a in 0..3 {
            m[a] += self.dims[a] as f64 * self.voxel_size;
        }
        m
    }

    pub fn is_aligned_with(&self, other: &VoxelGrid) -> bool {
        self.dims == other.dims && self.origin == other.origin && self.voxel_size == other.voxel_size
    }

    pub fn validate(&self, taxonomy: &ClassTaxonomy) -> Result<()> {
        match self.labels.iter().find(|&&l| !taxonomy.is_label(l)) {
            Some(&bad) => Err(Error::InvalidClassId(bad)),
            None => Ok(()),
        }
    }

    pub fn occupied_count(&self, free_id: ClassId) -> usize {
        self.labels.iter().filter(|&&l| l != free_id).count()
    }
}

/// Coarse-to-fine plan: query count, points per query for each stage and
/// the number of image samples per query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSchedule {
    query_count: usize,
    points_per_stage: Vec<usize>,
    sample_count: usize,
}

impl StageSchedule {
    /// `points_per_stage[0]` is the initial stage; the rest are decoder stages.
    pub fn new(query_count: usize, points_per_stage: Vec<usize>, sample_count: usize) -> Result<Self> {
        if query_count == 0 {
            return Err(Error::ScheduleViolation("query count must be at least 1"));
        }
        if sample_count == 0 {
            return Err(Error::ScheduleViolation("sample count must be at least 1"));
        }
        if points_per_stage.len() < 2 {
            return Err(Error::ScheduleViolation(
                "schedule needs the initial stage and at least one decoder stage",
            ));
        }
        if points_per_stage.contains(&0) {
            return Err(Error::ScheduleViolation(
                "every stage needs at least one point per query",
            ));
        }
        if points_per_stage.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::ScheduleViolation(
                "points per query must not decrease between stages",
            ));
        }
        Ok(Self {
            query_count,
            points_per_stage,
            sample_count,
        })
    }

    pub fn opus_t() -> Self {
        Self::builtin(600, &[1, 4, 16, 32, 64, 128], 4)
    }

    pub fn opus_s() -> Self {
        Self::builtin(1200, &[1, 4, 8, 16, 32, 64], 2)
    }

    pub fn opus_m() -> Self {
        Self::builtin(2400, &[1, 2, 4, 8, 16, 32], 2)
    }

    pub fn opus_l() -> Self {
        Self::builtin(4800, &[1, 2, 4, 8, 16, 16], 2)
    }

    fn builtin(q: usize, decoders: &[usize], s: usize) -> Self {
        // The initial points carry one point per query.
        let mut r = Vec::with_capacity(decoders.len() + 1);
        r.push(1);
        r.extend_from_slice(decoders);
        Self::new(q, r, s).expect("built-in schedules are valid")
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "opus-t" => Some(Self::opus_t()),
            "opus-s" => Some(Self::opus_s()),
            "opus-m" => Some(Self::opus_m()),
            "opus-l" => Some(Self::opus_l()),
            _ => None,
        }
    }

    pub fn query_count(&self) -> usize {
        self.query_count
    }

    pub fn points_per_stage(&self) -> &[usize] {
        &self.points_per_stage
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Number of decoder stages (excludes the initial stage).
    pub fn decoder_stages(&self) -> usize {
        self.points_per_stage.len() - 1
    }

    /// Total points emitted at `stage`.
    pub fn total_points(&self, stage: usize) -> Option<usize> {
        self.points_per_stage.get(stage).map(|r| r * self.query_count)
    }
}

/// Region of interest, voxel size, taxonomy and RNG seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    roi_min: Vec3,
    roi_max: Vec3,
    voxel_size: f64,
    taxonomy: ClassTaxonomy,
    seed: u64,
    dims: [usize; 3],
}

impl SceneConfig {
    pub fn new(roi_min: Vec3, roi_max: Vec3, voxel_size: f64, taxonomy: ClassTaxonomy, seed: u64) -> Result<Self> {
        if !(voxel_size > 0.0) || !voxel_size.is_finite() {
            return Err(Error::InvalidParameter("voxel size must be positive"));
        }
        if !geom::is_finite(roi_min) || !geom::is_finite(roi_max) {
            return Err(Error::InvalidParameter("region of interest must be finite"));
        }
        let mut dims = [0usize; 3];
        for a in 0..3 {
            if !(roi_min[a] < roi_max[a]) {
                return Err(Error::InvalidParameter("roi_min must be below roi_max on every axis"));
            }
            let cells = (roi_max[a] - roi_min[a]) / voxel_size;
            let rounded = libm::round(cells);
            if libm::fabs(cells - rounded) > 1e-6 || rounded < 1.0 {
                return Err(Error::InvalidParameter(
                    "region of interest is not a whole number of voxels",
                ));
            }
            dims[a] = rounded as usize;
        }
        Ok(Self {
            roi_min,
            roi_max,
            voxel_size,
            taxonomy,
            seed,
            dims,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn roi_min(&self) -> Vec3 {
        self.roi_min
    }

    pub fn roi_max(&self) -> Vec3 {
        self.roi_max
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn taxonomy(&self) -> &ClassTaxonomy {
        &self.taxonomy
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// All-free grid covering the ROI.
    pub fn empty_grid(&self) -> VoxelGrid {
        VoxelGrid::filled(self.roi_min, self.voxel_size, self.dims, self.taxonomy.free_id())
            .expect("scene config yields a valid grid")
    }
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self::new([-40.0, -40.0, -1.0], [40.0, 40.0, 5.4], 0.4, ClassTaxonomy::occ3d(), 0)
            .expect("default scene config is valid")
    }
}
