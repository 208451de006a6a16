use thiserror::Error;

use crate::types::ClassId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid class id {0}")]
    InvalidClassId(ClassId),
    #[error("non-finite coordinate at point {0}")]
    NonFiniteCoordinate(usize),
    #[error("point set is empty")]
    EmptySet,
    #[error("point set carries no class labels")]
    MissingLabels,
    #[error("cost entry ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },
    #[error("probability at row {row}, class {class} is outside [0, 1]")]
    ProbabilityOutOfRange { row: usize, class: usize },
    #[error("{0} points cannot be laid out on an even BEV grid")]
    CountNotRepresentable(usize),
    #[error("stage schedule violation: {0}")]
    ScheduleViolation(&'static str),
    #[error("coordinate ({x}, {y}) lies outside the feature map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("voxel grids are not aligned")]
    GridMismatch,
    #[error("primitive {0} extends outside the region of interest")]
    PrimitiveOutOfRoi(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
