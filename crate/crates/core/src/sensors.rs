//! Omnidirectional acquisition models.
//!
//! Every model maps a feature measurement to a non-central line of sight
//! `{S, q}` in the rig frame (source point plus unit direction), and offers
//! the forward projection used to synthesize measurements. Models are
//! immutable after construction; all operations are pure.
//!
//! Measurements use normalized, focal-length-free image coordinates; pixel
//! grids, distortion and intrinsics calibration are out of scope.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{
    quaternion_wxyz, rotation_from_quaternion_wxyz, Pose, Vec3,
};

/// One observation ray: source point and unit direction toward the feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineOfSight {
    pub source: Vec3,
    pub direction: Vec3,
}

impl LineOfSight {
    pub fn new(source: Vec3, direction: Vec3) -> Result<Self> {
        let norm = direction.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDirection { norm });
        }
        Ok(Self { source, direction })
    }
}

/// A single feature observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureMeasurement {
    /// Normalized image coordinates in camera `camera` of the model.
    Image { camera: usize, coords: [f64; 2] },
    /// Index into an explicit ray table.
    RaySample { index: usize },
}

impl FeatureMeasurement {
    pub fn image(camera: usize, x: f64, y: f64) -> Self {
        Self::Image {
            camera,
            coords: [x, y],
        }
    }
}

/// Central pinhole with a symmetric field of view around the +z optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinholeCamera {
    /// Full cone angle, radians, in (0, pi).
    pub fov: f64,
}

impl PinholeCamera {
    pub fn new(fov: f64) -> Result<Self> {
        if !(fov > 0.0 && fov < std::f64::consts::PI) {
            return Err(Error::InvalidParameter {
                reason: format!("pinhole fov must be in (0, pi), got {fov}"),
            });
        }
        Ok(Self { fov })
    }

    fn max_tan_sq(&self) -> f64 {
        let t = (self.fov / 2.0).tan();
        t * t
    }

    fn ray(&self, coords: [f64; 2]) -> Result<Vec3> {
        let [mx, my] = coords;
        if mx * mx + my * my > self.max_tan_sq() + 1e-12 {
            return Err(Error::OutOfFieldOfView);
        }
        Ok(Vec3::new(mx, my, 1.0).normalize())
    }

    fn project(&self, p: &Vec3) -> Result<[f64; 2]> {
        if p.z <= 0.0 {
            return Err(Error::NotVisible);
        }
        let mx = p.x / p.z;
        let my = p.y / p.z;
        if mx * mx + my * my > self.max_tan_sq() {
            return Err(Error::NotVisible);
        }
        Ok([mx, my])
    }
}

/// One camera of a rig: its pose in the rig frame and its pinhole model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigCamera {
    pub pose: Pose,
    pub camera: PinholeCamera,
}

/// Supported acquisition geometries.
#[derive(Debug, Clone, PartialEq)]
pub enum CameraModel {
    /// Single viewpoint at the rig origin, optical axis +z.
    CentralPinhole(PinholeCamera),
    /// Several pinhole cameras rigidly mounted in the rig frame; the ray
    /// source of camera `k` is that camera's position, which realizes the
    /// multi-optical-center case.
    MultiCameraRig(Vec<RigCamera>),
    /// Parabolic mirror `z = (x^2 + y^2) / (4 f) - f` viewed by an
    /// orthographic camera along -z. The mirror focus sits at the rig origin
    /// and acts as the single effective viewpoint, so rays are expressed as
    /// `S = 0`, `q` = unit direction from the focus.
    ParabolicCatadioptric { focal: f64 },
    /// Explicit list of calibrated rays.
    RayTable(Vec<LineOfSight>),
}

impl CameraModel {
    pub fn central_pinhole(fov: f64) -> Result<Self> {
        Ok(Self::CentralPinhole(PinholeCamera::new(fov)?))
    }

    pub fn catadioptric(focal: f64) -> Result<Self> {
        if !(focal.is_finite() && focal > 0.0) {
            return Err(Error::InvalidParameter {
                reason: format!("mirror focal parameter must be positive, got {focal}"),
            });
        }
        Ok(Self::ParabolicCatadioptric { focal })
    }

    /// Number of cameras (1 for the single-viewpoint models).
    pub fn camera_count(&self) -> usize {
        match self {
            Self::MultiCameraRig(cams) => cams.len(),
            _ => 1,
        }
    }

    /// Same model restricted to the first `n` cameras of a rig; other models
    /// are returned unchanged.
    pub fn truncated(&self, n: usize) -> Self {
        match self {
            Self::MultiCameraRig(cams) => {
                Self::MultiCameraRig(cams.iter().take(n.max(1)).copied().collect())
            }
            other => other.clone(),
        }
    }

    /// Line of sight of a measurement, in the rig frame.
    pub fn ray_for_measurement(&self, m: &FeatureMeasurement) -> Result<LineOfSight> {
        match (self, m) {
            (Self::CentralPinhole(cam), FeatureMeasurement::Image { camera, coords }) => {
                if *camera != 0 {
                    return Err(Error::UnknownCameraIndex {
                        index: *camera,
                        count: 1,
                    });
                }
                Ok(LineOfSight {
                    source: Vec3::zeros(),
                    direction: cam.ray(*coords)?,
                })
            }
            (Self::MultiCameraRig(cams), FeatureMeasurement::Image { camera, coords }) => {
                let rig_cam = cams.get(*camera).ok_or(Error::UnknownCameraIndex {
                    index: *camera,
                    count: cams.len(),
                })?;
                let local = rig_cam.camera.ray(*coords)?;
                Ok(LineOfSight {
                    source: rig_cam.pose.position,
                    direction: rig_cam.pose.rotation * local,
                })
            }
            (Self::ParabolicCatadioptric { focal }, FeatureMeasurement::Image { camera, coords }) => {
                if *camera != 0 {
                    return Err(Error::UnknownCameraIndex {
                        index: *camera,
                        count: 1,
                    });
                }
                let [mx, my] = *coords;
                let mirror = Vec3::new(mx, my, (mx * mx + my * my) / (4.0 * focal) - focal);
                // The orthographic viewing ray reflects at the mirror point and
                // continues through the focus; the scene therefore lies along
                // -M from the origin.
                Ok(LineOfSight {
                    source: Vec3::zeros(),
                    direction: -mirror.normalize(),
                })
            }
            (Self::RayTable(rays), FeatureMeasurement::RaySample { index }) => rays
                .get(*index)
                .copied()
                .ok_or(Error::UnknownCameraIndex {
                    index: *index,
                    count: rays.len(),
                }),
            (Self::RayTable(rays), FeatureMeasurement::Image { camera, .. }) => {
                Err(Error::UnknownCameraIndex {
                    index: *camera,
                    count: rays.len(),
                })
            }
            (_, FeatureMeasurement::RaySample { index }) => Err(Error::UnknownCameraIndex {
                index: *index,
                count: self.camera_count(),
            }),
        }
    }

    /// Forward projection of a rig-frame point into a measurement whose ray
    /// passes back through the point.
    pub fn project_point(&self, point: &Vec3) -> Result<FeatureMeasurement> {
        match self {
            Self::CentralPinhole(cam) => {
                let coords = cam.project(point)?;
                Ok(FeatureMeasurement::Image { camera: 0, coords })
            }
            Self::MultiCameraRig(cams) => {
                for (k, rig_cam) in cams.iter().enumerate() {
                    let local = rig_cam.pose.apply_inverse(point);
                    if let Ok(coords) = rig_cam.camera.project(&local) {
                        return Ok(FeatureMeasurement::Image { camera: k, coords });
                    }
                }
                Err(Error::NotVisible)
            }
            Self::ParabolicCatadioptric { focal } => {
                let norm = point.norm();
                if norm < 1e-12 {
                    return Err(Error::NotVisible);
                }
                let q = point / norm;
                let rho_sq = q.x * q.x + q.y * q.y;
                let t = if rho_sq == 0.0 {
                    if q.z <= 0.0 {
                        // Straight down the axis the mirror sees itself.
                        return Err(Error::NotVisible);
                    }
                    *focal / q.z
                } else {
                    // Mirror point M = -t q with M on the paraboloid; since
                    // |q| = 1 the quadratic reduces to t = (1 - q_z) 2f / rho^2.
                    (1.0 - q.z) * 2.0 * focal / rho_sq
                };
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::NotVisible);
                }
                let mirror = -q * t;
                Ok(FeatureMeasurement::Image {
                    camera: 0,
                    coords: [mirror.x, mirror.y],
                })
            }
            Self::RayTable(rays) => {
                for (index, los) in rays.iter().enumerate() {
                    let rel = point - los.source;
                    let range = rel.norm();
                    if range < 1e-12 {
                        continue;
                    }
                    let along = los.direction.dot(&rel);
                    if along <= 0.0 {
                        continue;
                    }
                    let off_ray = (rel - los.direction * along).norm();
                    if off_ray <= 1e-9 * range {
                        return Ok(FeatureMeasurement::RaySample { index });
                    }
                }
                Err(Error::NotVisible)
            }
        }
    }
}

/// Reference three-camera rig: pinhole cameras offset `offset` from the rig
/// origin at azimuths 0, 120 and 240 degrees, each tilted `tilt` away from
/// straight down toward its azimuth, with the given field of view.
///
/// Rig frame is z-up, so with an identity rig pose the cameras look at the
/// terrain below.
pub fn three_camera_rig(offset: f64, tilt: f64, fov: f64) -> Result<CameraModel> {
    let mut cams = Vec::with_capacity(3);
    for k in 0..3 {
        let azimuth = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
        let yaw = crate::geometry::rotation_from_axis_angle(&Vec3::z(), azimuth)?;
        let pitch = crate::geometry::rotation_from_axis_angle(
            &Vec3::y(),
            std::f64::consts::PI - tilt,
        )?;
        cams.push(RigCamera {
            pose: Pose::new(
                yaw * pitch,
                Vec3::new(offset * azimuth.cos(), offset * azimuth.sin(), 0.0),
            ),
            camera: PinholeCamera::new(fov)?,
        });
    }
    Ok(CameraModel::MultiCameraRig(cams))
}

/// Default rig used by the simulated experiments: 30 mm center offset,
/// 30 degrees of outward tilt, 80 degree fields of view.
pub fn reference_rig() -> CameraModel {
    three_camera_rig(30.0, 30.0_f64.to_radians(), 80.0_f64.to_radians())
        .expect("reference rig parameters are valid")
}

/// Reads a rig configuration file: one block per camera with keys
/// `camera.N.position = x y z`, `camera.N.quaternion = w x y z`,
/// `camera.N.fov_deg = <degrees>`. Blank lines and `#` comments are ignored.
pub fn load_rig(path: impl AsRef<Path>) -> Result<CameraModel> {
    parse_rig(&fs::read_to_string(path)?)
}

pub fn parse_rig(text: &str) -> Result<CameraModel> {
    #[derive(Default)]
    struct Partial {
        position: Option<Vec3>,
        quaternion: Option<[f64; 4]>,
        fov_deg: Option<f64>,
    }
    let mut partials: Vec<(usize, Partial)> = Vec::new();

    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| Error::MalformedRecord {
            line: line_no + 1,
            reason: reason.to_string(),
        };
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
        let mut key_parts = key.trim().split('.');
        if key_parts.next() != Some("camera") {
            return Err(bad("key must start with `camera.`"));
        }
        let index: usize = key_parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("missing camera index"))?;
        let field = key_parts.next().ok_or_else(|| bad("missing field name"))?;
        if key_parts.next().is_some() {
            return Err(bad("too many key segments"));
        }

        let numbers: Vec<f64> = value
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("cannot parse numeric value"))?;

        let entry = match partials.iter_mut().find(|(i, _)| *i == index) {
            Some((_, p)) => p,
            None => {
                partials.push((index, Partial::default()));
                &mut partials.last_mut().unwrap().1
            }
        };
        match field {
            "position" => {
                if numbers.len() != 3 {
                    return Err(bad("position needs 3 values"));
                }
                entry.position = Some(Vec3::new(numbers[0], numbers[1], numbers[2]));
            }
            "quaternion" => {
                if numbers.len() != 4 {
                    return Err(bad("quaternion needs 4 values"));
                }
                entry.quaternion = Some([numbers[0], numbers[1], numbers[2], numbers[3]]);
            }
            "fov_deg" => {
                if numbers.len() != 1 {
                    return Err(bad("fov_deg needs 1 value"));
                }
                entry.fov_deg = Some(numbers[0]);
            }
            other => return Err(bad(&format!("unknown field `{other}`"))),
        }
    }

    if partials.is_empty() {
        return Err(Error::MalformedRecord {
            line: 0,
            reason: "rig file defines no cameras".to_string(),
        });
    }
    partials.sort_by_key(|(i, _)| *i);

    let mut cams = Vec::with_capacity(partials.len());
    for (index, p) in partials {
        let missing = |what: &str| Error::MalformedRecord {
            line: 0,
            reason: format!("camera {index} is missing `{what}`"),
        };
        let position = p.position.ok_or_else(|| missing("position"))?;
        let quaternion = p.quaternion.ok_or_else(|| missing("quaternion"))?;
        let fov_deg = p.fov_deg.ok_or_else(|| missing("fov_deg"))?;
        cams.push(RigCamera {
            pose: Pose::new(rotation_from_quaternion_wxyz(quaternion)?, position),
            camera: PinholeCamera::new(fov_deg.to_radians())?,
        });
    }
    Ok(CameraModel::MultiCameraRig(cams))
}

/// Renders a rig to the configuration format accepted by [`parse_rig`].
pub fn format_rig(model: &CameraModel) -> Result<String> {
    let CameraModel::MultiCameraRig(cams) = model else {
        return Err(Error::InvalidParameter {
            reason: "only multi-camera rigs have a rig file representation".to_string(),
        });
    };
    let mut out = String::new();
    for (k, cam) in cams.iter().enumerate() {
        let p = cam.pose.position;
        let q = quaternion_wxyz(&cam.pose.rotation);
        let _ = writeln!(out, "camera.{k}.position = {} {} {}", p.x, p.y, p.z);
        let _ = writeln!(
            out,
            "camera.{k}.quaternion = {} {} {} {}",
            q[0], q[1], q[2], q[3]
        );
        let _ = writeln!(out, "camera.{k}.fov_deg = {}", cam.camera.fov.to_degrees());
    }
    Ok(out)
}

pub fn save_rig(model: &CameraModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_rig(model)?)?;
    Ok(())
}
