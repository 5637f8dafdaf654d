//! Absolute pose and ego-motion estimation from omnidirectional line-of-sight
//! correspondences anchored to a digital terrain map, plus the simulation
//! harness used to exercise the drift-correction loop at desk scale.

pub mod error;
pub mod geometry;
pub mod terrain;

pub use error::{Error, Result};
pub use geometry::{EgoMotion, Mat3, Pose, Rot3, Vec3};
pub use terrain::{DtmGrid, TangentPlane};
