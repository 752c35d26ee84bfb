//! Pinhole cameras mounted on the ego vehicle.
//!
//! Frame conventions, fixed for the whole crate:
//!
//! * ego frame: x forward, y left, z up;
//! * camera frame: x right, y down, z along the optical axis;
//! * pixels: origin at the top-left corner, u rightward, v downward.
//!
//! A [`Pose`] holds yaw/pitch/roll composed as `Rz(yaw) * Ry(pitch) * Rx(roll)`
//! (see [`euler_to_rotation`]). That rotation maps ego coordinates into a body
//! frame with ego-style axes, and [`EGO_TO_CAMERA_AXES`] then relabels axes into
//! the camera frame, so an ego point `q` lands at
//!
//! ```text
//! X_cam = EGO_TO_CAMERA_AXES * R(pose) * q + t
//! ```
//!
//! with `t` the pose translation expressed in the camera frame. With all angles
//! at zero the camera looks along ego +x.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::num::{wrap_angle, Real};

/// Relabels ego-style body axes (x fwd, y left, z up) as camera axes
/// (x right, y down, z fwd). Proper rotation, det = +1.
#[rustfmt::skip]
pub const EGO_TO_CAMERA_AXES: [[f64; 3]; 3] = [
    [0.0, -1.0,  0.0],
    [0.0,  0.0, -1.0],
    [1.0,  0.0,  0.0],
];

/// Depths with magnitude at or below this are treated as lying on the image plane.
pub const DEGENERATE_DEPTH: f64 = 1e-12;

pub fn axes_matrix<T: Real>() -> Matrix3<T> {
    Matrix3::from_fn(|r, c| T::lit(EGO_TO_CAMERA_AXES[r][c]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub px: T,
    pub py: T,
    pub width: u32,
    pub height: u32,
}

impl<T: Real> Intrinsics<T> {
    pub fn new(fx: T, fy: T, px: T, py: T, width: u32, height: u32) -> Result<Self> {
        let k = Self { fx, fy, px, py, width, height };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > T::zero() && self.fy > T::zero()) {
            return Err(invalid(format!("focal lengths must be positive, got fx={} fy={}", self.fx, self.fy)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(invalid("image size must be positive"));
        }
        let w = T::from_u32(self.width).unwrap();
        let h = T::from_u32(self.height).unwrap();
        if !(self.px >= T::zero() && self.px < w && self.py >= T::zero() && self.py < h) {
            return Err(invalid(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.px, self.py, self.width, self.height
            )));
        }
        Ok(())
    }

    /// The 3x3 intrinsic matrix.
    pub fn matrix(&self) -> Matrix3<T> {
        let (z, o) = (T::zero(), T::one());
        Matrix3::new(self.fx, z, self.px, z, self.fy, self.py, z, z, o)
    }

    pub fn inverse_matrix(&self) -> Matrix3<T> {
        let (z, o) = (T::zero(), T::one());
        Matrix3::new(o / self.fx, z, -self.px / self.fx, z, o / self.fy, -self.py / self.fy, z, z, o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose<T> {
    pub yaw: T,
    pub pitch: T,
    pub roll: T,
    #[serde(rename = "t")]
    pub translation: [T; 3],
}

impl<T: Real> Pose<T> {
    /// Builds a pose, wrapping each angle into `(-pi, pi]`.
    pub fn new(yaw: T, pitch: T, roll: T, translation: [T; 3]) -> Self {
        Self { yaw: wrap_angle(yaw), pitch: wrap_angle(pitch), roll: wrap_angle(roll), translation }
    }

    pub fn identity() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), [T::zero(); 3])
    }

    pub fn rotation(&self) -> Result<Matrix3<T>> {
        euler_to_rotation(self.yaw, self.pitch, self.roll)
    }

    /// Full ego-to-camera rotation, including the axis relabelling.
    pub fn ego_to_camera(&self) -> Result<Matrix3<T>> {
        Ok(axes_matrix::<T>() * self.rotation()?)
    }

    pub fn translation_vector(&self) -> Vector3<T> {
        Vector3::from(self.translation)
    }

    /// Same angles and translation; used after perturbing only the angles.
    pub fn with_angles(&self, yaw: T, pitch: T, roll: T) -> Self {
        Self::new(yaw, pitch, roll, self.translation)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.yaw, self.pitch, self.roll].into_iter().chain(self.translation).all(|v| v.is_finite());
        if !finite {
            return Err(invalid("pose has non-finite components"));
        }
        let pi = T::pi();
        for a in [self.yaw, self.pitch, self.roll] {
            if !(a > -pi && a <= pi) {
                return Err(invalid(format!("angle {a} outside (-pi, pi]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel<T> {
    pub camera_id: String,
    pub intrinsics: Intrinsics<T>,
    pub pose: Pose<T>,
}

impl<T: Real> CameraModel<T> {
    pub fn new(camera_id: impl Into<String>, intrinsics: Intrinsics<T>, pose: Pose<T>) -> Result<Self> {
        let cam = Self { camera_id: camera_id.into(), intrinsics, pose };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        self.pose.validate()
    }

    pub fn with_pose(&self, pose: Pose<T>) -> Self {
        Self { pose, ..self.clone() }
    }

    /// Ego-frame point into camera coordinates.
    pub fn to_camera_frame(&self, q: &Vector3<T>) -> Result<Vector3<T>> {
        Ok(self.pose.ego_to_camera()? * q + self.pose.translation_vector())
    }

    /// Position of the optical centre in the ego frame.
    pub fn center_in_ego(&self) -> Result<Vector3<T>> {
        Ok(-(self.pose.ego_to_camera()?.transpose() * self.pose.translation_vector()))
    }
}

/// Rotation `Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn euler_to_rotation<T: Real>(yaw: T, pitch: T, roll: T) -> Result<Matrix3<T>> {
    if !(yaw.is_finite() && pitch.is_finite() && roll.is_finite()) {
        return Err(invalid("non-finite Euler angle"));
    }
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    Ok(Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles<T> {
    pub yaw: T,
    pub pitch: T,
    pub roll: T,
    /// Pitch sits at +-pi/2; roll was pinned to zero and yaw absorbs the rest.
    pub gimbal_locked: bool,
}

/// Orthogonality tolerance accepted by [`rotation_to_euler`].
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Inverse of [`euler_to_rotation`] on the branch with pitch in `[-pi/2, pi/2]`.
pub fn rotation_to_euler<T: Real>(r: &Matrix3<T>) -> Result<EulerAngles<T>> {
    let residual = (r.transpose() * r - Matrix3::identity()).abs().max();
    let det = r.determinant();
    let tol = T::lit(ROTATION_TOLERANCE).max(T::eps() * T::lit(100.0));
    if !(residual <= tol) || !((det - T::one()).abs() <= tol) {
        let resid = residual.to_f64_lossy().max((det - T::one()).abs().to_f64_lossy());
        return Err(Error::NotARotation(resid));
    }
    let sin_pitch = (-r[(2, 0)]).clamp(-T::one(), T::one());
    let lock_tol = T::lit(1e-10).max(T::eps() * T::lit(10.0));
    if T::one() - sin_pitch.abs() <= lock_tol {
        let pitch = if sin_pitch > T::zero() { T::frac_pi_2() } else { -T::frac_pi_2() };
        let yaw = (-r[(0, 1)]).atan2(r[(1, 1)]);
        return Ok(EulerAngles { yaw: wrap_angle(yaw), pitch, roll: T::zero(), gimbal_locked: true });
    }
    Ok(EulerAngles {
        yaw: wrap_angle(r[(1, 0)].atan2(r[(0, 0)])),
        pitch: sin_pitch.asin(),
        roll: wrap_angle(r[(2, 1)].atan2(r[(2, 2)])),
        gimbal_locked: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<T> {
    pub pixel: Vector2<T>,
    /// Camera-frame z. Negative means the point is behind the camera.
    pub depth: T,
}

impl<T: Real> Projection<T> {
    pub fn is_visible(&self, intr: &Intrinsics<T>) -> bool {
        self.depth > T::zero() && in_image(intr, &self.pixel)
    }
}

/// Projects an ego-frame point: `d * q = K (R q + t)`.
pub fn project_point<T: Real>(cam: &CameraModel<T>, q: &Vector3<T>) -> Result<Projection<T>> {
    let x = cam.to_camera_frame(q)?;
    project_camera_point(&cam.intrinsics, &x)
}

/// Projects a point already expressed in the camera frame.
pub fn project_camera_point<T: Real>(intr: &Intrinsics<T>, x: &Vector3<T>) -> Result<Projection<T>> {
    let depth = x.z;
    if depth.abs() <= T::lit(DEGENERATE_DEPTH) {
        return Err(Error::DegenerateProjection(depth.to_f64_lossy()));
    }
    let h = intr.matrix() * x;
    Ok(Projection { pixel: Vector2::new(h.x / h.z, h.y / h.z), depth })
}

/// Half-open image bounds test: `0 <= u < width`, `0 <= v < height`.
pub fn in_image<T: Real>(intr: &Intrinsics<T>, pixel: &Vector2<T>) -> bool {
    let w = T::from_u32(intr.width).unwrap();
    let h = T::from_u32(intr.height).unwrap();
    pixel.x >= T::zero() && pixel.x < w && pixel.y >= T::zero() && pixel.y < h
}
