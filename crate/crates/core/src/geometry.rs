//! Elementary 3D types, rotation handling, frame transforms and the oblique
//! projection operator used throughout the constraint construction.
//!
//! Conventions: the world frame is z-up with terrain heights along +z; pinhole
//! camera frames are z-forward. One consistent length unit is assumed per run
//! (millimeters in the lab-scale scenarios). All values here are immutable
//! after construction and every function is pure, so everything can be called
//! concurrently.

use nalgebra::{Matrix2x3, Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Rot3 = Rotation3<f64>;

/// Relative threshold on |n.u| below which a ray counts as grazing the plane.
///
/// The depth and projection denominators vanish for rays parallel to the
/// tangent plane; features below this threshold are rejected instead of
/// producing an exploding projection.
pub const GRAZE_EPS_REL: f64 = 1e-6;

/// Rigid transform from a camera frame into the world frame: `wv = R cv + p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rot3,
    pub position: Vec3,
}

impl Pose {
    pub fn new(rotation: Rot3, position: Vec3) -> Self {
        Self { rotation, position }
    }

    pub fn identity() -> Self {
        Self::new(Rot3::identity(), Vec3::zeros())
    }

    /// Camera-frame vector into the world frame.
    pub fn apply(&self, cv: &Vec3) -> Vec3 {
        self.rotation * cv + self.position
    }

    /// World-frame vector into the camera frame: `Rᵀ (wv − p)`.
    pub fn apply_inverse(&self, wv: &Vec3) -> Vec3 {
        self.rotation.inverse() * (wv - self.position)
    }
}

/// Relative motion between two camera frames: `c2v = R12 c1v + p12`,
/// with the translation expressed in the second camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoMotion {
    pub rotation: Rot3,
    pub translation: Vec3,
}

impl EgoMotion {
    pub fn new(rotation: Rot3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rot3::identity(), Vec3::zeros())
    }

    /// First-frame vector into the second frame.
    pub fn apply(&self, c1v: &Vec3) -> Vec3 {
        self.rotation * c1v + self.translation
    }

    /// Relative motion implied by two absolute poses of the same camera.
    pub fn between(pose1: &Pose, pose2: &Pose) -> Self {
        let r12 = pose2.rotation.inverse() * pose1.rotation;
        let p12 = pose2.rotation.inverse() * (pose1.position - pose2.position);
        Self::new(r12, p12)
    }

    /// Second-frame pose obtained by applying this motion after `pose1`.
    pub fn compose_pose(&self, pose1: &Pose) -> Pose {
        let r12_inv = self.rotation.inverse();
        Pose::new(
            pose1.rotation * r12_inv,
            pose1.position - pose1.rotation * (r12_inv * self.translation),
        )
    }
}

/// Rodrigues rotation about a unit axis.
pub fn rotation_from_axis_angle(axis: &Vec3, angle: f64) -> Result<Rot3> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDirection { norm });
    }
    Ok(Rot3::from_axis_angle(&Unit::new_unchecked(*axis), angle))
}

/// Exponential map: rotation by `|v|` radians about `v / |v|` (identity at 0).
pub fn rotation_exp(v: &Vec3) -> Rot3 {
    Rot3::new(*v)
}

/// Geodesic angle of a rotation, in radians.
pub fn rotation_angle(r: &Rot3) -> f64 {
    r.angle()
}

/// Oblique projection operator `P(u, n) = I − u nᵀ / (nᵀ u)` (projects along
/// `u` onto the subspace normal to `n`). Satisfies `P(u,n) u = 0` and
/// `nᵀ P(u,n) = 0ᵀ`.
pub fn projection_operator(u: &Vec3, n: &Vec3) -> Result<Mat3> {
    let dot = n.dot(u);
    if dot.abs() <= GRAZE_EPS_REL * u.norm() * n.norm() {
        return Err(Error::GrazingRay { dot });
    }
    Ok(Mat3::identity() - u * n.transpose() / dot)
}

/// Orthonormal basis of the plane normal to the unit vector `q`, as two rows.
///
/// The rows satisfy `B q = 0` and `B Bᵀ = I₂`, and `Bᵀ B = I − q qᵀ`, so the
/// two rows carry the same information as the rank-2 projector `P(q, q)` in a
/// well-conditioned square form.
pub fn orthogonal_complement_basis(q: &Vec3) -> Matrix2x3<f64> {
    // Seed with the coordinate axis least aligned with q for stability.
    let abs = q.abs();
    let seed = if abs.x <= abs.y && abs.x <= abs.z {
        Vec3::x()
    } else if abs.y <= abs.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let b1 = seed.cross(q).normalize();
    let b2 = q.cross(&b1);
    Matrix2x3::from_rows(&[b1.transpose(), b2.transpose()])
}

/// Quaternion components `(w, x, y, z)` of a rotation, with `w >= 0` so the
/// representation written to files is canonical.
pub fn quaternion_wxyz(r: &Rot3) -> [f64; 4] {
    let q = UnitQuaternion::from_rotation_matrix(r);
    let q = if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    };
    [q.w, q.i, q.j, q.k]
}

/// Rotation from quaternion components `(w, x, y, z)`, normalized on load.
pub fn rotation_from_quaternion_wxyz(q: [f64; 4]) -> Result<Rot3> {
    let raw = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
    let norm = raw.norm();
    if !norm.is_finite() || norm < 1e-12 {
        return Err(Error::InvalidRotation);
    }
    Ok(UnitQuaternion::from_quaternion(raw).to_rotation_matrix())
}
