//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("direction vector must be unit length (norm = {norm})")]
    InvalidDirection { norm: f64 },

    #[error("rotation parameters are degenerate or non-normalizable")]
    InvalidRotation,

    #[error("ray is nearly parallel to the tangent plane (|n.u| = {dot:e})")]
    GrazingRay { dot: f64 },

    #[error("query point ({x}, {y}) lies outside the grid extent")]
    OutOfBounds { x: f64, y: f64 },

    #[error("query touches a NODATA cell near ({x}, {y})")]
    NoDataCell { x: f64, y: f64 },

    #[error("ray does not intersect the terrain")]
    NoIntersection,

    #[error("ray origin lies below the terrain surface")]
    StartsBelowTerrain,

    #[error("malformed grid header: {reason}")]
    MalformedHeader { reason: String },

    #[error("grid row {row} has {got} samples, expected {expected}")]
    RowLengthMismatch {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },

    #[error("measurement outside the camera field of view")]
    OutOfFieldOfView,

    #[error("unknown camera index {index} (model has {count})")]
    UnknownCameraIndex { index: usize, count: usize },

    #[error("point is not visible in any camera of the model")]
    NotVisible,

    #[error("all {total} features were rejected during linearization")]
    AllFeaturesRejected { total: usize },

    #[error("system is rank deficient: effective rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("{usable} usable features, at least {required} required")]
    TooFewFeatures { usable: usize, required: usize },

    #[error("cost increased for {escalations} consecutive damping escalations")]
    DivergenceDetected { escalations: usize },

    #[error("trajectory touches terrain at t = {t} s")]
    TerrainCollision { t: f64 },

    #[error("timestamp mismatch between series at index {index}")]
    TimestampMismatch { index: usize },

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
