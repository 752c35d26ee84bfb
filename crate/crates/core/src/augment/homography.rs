//! Projective maps between the original and the perturbed image plane.
//!
//! Two estimators live here: a normalized direct linear transform over
//! matched anchor pairs, and the closed-form plane-induced homography
//! `K (R + t n^T / d) K^-1` used to check it.

use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::augment::pairs::MatchedPairSet;
use crate::camera::{CameraModel, Pose};
use crate::error::{invalid, Error, Result};
use crate::num::Real;

/// Fewest correspondences the linear fit accepts; below this the identity is used.
pub const MIN_PAIRS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Fitted,
    Analytic,
    IdentityFallback,
}

/// A non-singular 3x3 projective map `s * q_hat = H q`, stored in a fixed
/// gauge: unit Frobenius norm and a non-negative bottom-right entry (or, when
/// that entry vanishes, a positive first non-zero entry in row-major order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography<T: Real> {
    matrix: Matrix3<T>,
    provenance: Provenance,
}

impl<T: Real> Homography<T> {
    pub fn new(matrix: Matrix3<T>, provenance: Provenance) -> Result<Self> {
        let matrix = gauge_normalize(&matrix)?;
        let det = matrix.determinant();
        // unit-norm 3x3 has |det| <= 3^-1.5; anything this small is numerically singular
        if !det.is_finite() || det.abs() <= T::eps() * T::lit(16.0) {
            return Err(Error::SingularHomography);
        }
        Ok(Self { matrix, provenance })
    }

    pub fn identity_fallback() -> Self {
        Self::new(Matrix3::identity(), Provenance::IdentityFallback).expect("identity is regular")
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.matrix
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_identity_fallback(&self) -> bool {
        self.provenance == Provenance::IdentityFallback
    }

    /// Maps a pixel, dividing out the homogeneous scale.
    pub fn apply(&self, q: &Vector2<T>) -> Vector2<T> {
        let h = self.matrix * Vector3::new(q.x, q.y, T::one());
        Vector2::new(h.x / h.z, h.y / h.z)
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self.matrix.try_inverse().ok_or(Error::SingularHomography)?;
        Self::new(inv, self.provenance)
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> [T; 9] {
        let m = &self.matrix;
        [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 0)], m[(1, 1)], m[(1, 2)], m[(2, 0)], m[(2, 1)], m[(2, 2)]]
    }

    pub fn from_row_major(v: [T; 9], provenance: Provenance) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(&v), provenance)
    }

    /// Frobenius distance between two gauge-normalized matrices.
    pub fn distance(&self, other: &Self) -> T {
        (self.matrix - other.matrix).norm()
    }
}

/// Scales to unit Frobenius norm and fixes the sign.
pub fn gauge_normalize<T: Real>(m: &Matrix3<T>) -> Result<Matrix3<T>> {
    let norm = m.norm();
    if !norm.is_finite() || norm <= T::zero() {
        return Err(Error::SingularHomography);
    }
    let mut h = m / norm;
    let tiny = T::eps() * T::lit(8.0);
    let pivot = if h[(2, 2)].abs() > tiny {
        h[(2, 2)]
    } else {
        // row-major scan; nalgebra iterates column-major
        (0..9).map(|i| h[(i / 3, i % 3)]).find(|v| v.abs() > tiny).unwrap_or(T::one())
    };
    if pivot < T::zero() {
        h = -h;
    }
    Ok(h)
}

/// Similarity that moves the centroid to the origin and scales the mean
/// distance from it to `sqrt(2)`.
fn conditioning<T: Real>(points: &[Vector2<T>]) -> Matrix3<T> {
    let n = T::from_usize(points.len()).unwrap();
    let centroid = points.iter().fold(Vector2::zeros(), |acc, p| acc + p) / n;
    let mean_dist = points.iter().map(|p| (p - centroid).norm()).fold(T::zero(), |a, b| a + b) / n;
    let s = if mean_dist > T::zero() { T::lit(2.0).sqrt() / mean_dist } else { T::one() };
    let z = T::zero();
    Matrix3::new(s, z, -s * centroid.x, z, s, -s * centroid.y, z, z, T::one())
}

fn transform<T: Real>(m: &Matrix3<T>, p: &Vector2<T>) -> Vector2<T> {
    let h = m * Vector3::new(p.x, p.y, T::one());
    Vector2::new(h.x / h.z, h.y / h.z)
}

/// Least-squares homography from matched pairs.
///
/// Returns the identity fallback when fewer than [`MIN_PAIRS`] pairs exist.
/// Otherwise stacks the two independent rows of `q_hat x (H q) = 0` per pair
/// on Hartley-conditioned coordinates and takes the right singular vector of
/// the smallest singular value. Configurations whose design matrix has rank
/// below 8 (e.g. all points on one line) are rejected.
pub fn fit_homography<T: Real>(pairs: &MatchedPairSet<T>) -> Result<Homography<T>> {
    let pts: Vec<_> = pairs.points().collect();
    fit_points(&pts)
}

pub fn fit_points<T: Real>(pairs: &[(Vector2<T>, Vector2<T>)]) -> Result<Homography<T>> {
    if pairs.len() < MIN_PAIRS {
        return Ok(Homography::identity_fallback());
    }
    if pairs.iter().any(|(a, b)| !(a.iter().chain(b.iter()).all(|v| v.is_finite()))) {
        return Err(invalid("non-finite correspondence"));
    }
    let src: Vec<_> = pairs.iter().map(|(a, _)| *a).collect();
    let dst: Vec<_> = pairs.iter().map(|(_, b)| *b).collect();
    let t_src = conditioning(&src);
    let t_dst = conditioning(&dst);

    // zero padding keeps the matrix at least 9x9 so the full V is available
    let rows = (2 * pairs.len()).max(9);
    let mut a = DMatrix::<T>::zeros(rows, 9);
    let (z, o) = (T::zero(), T::one());
    for (i, (p, q)) in src.iter().zip(&dst).enumerate() {
        let p = transform(&t_src, p);
        let q = transform(&t_dst, q);
        let (x, y, u, v) = (p.x, p.y, q.x, q.y);
        let r0 = [z, z, z, -x, -y, -o, v * x, v * y, v];
        let r1 = [x, y, o, z, z, z, -u * x, -u * y, -u];
        for c in 0..9 {
            a[(2 * i, c)] = r0[c];
            a[(2 * i + 1, c)] = r1[c];
        }
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| invalid("SVD did not produce V"))?;
    let sv = &svd.singular_values;
    let sigma_max = sv.max();
    let rank_tol = sigma_max * T::eps().sqrt();
    let rank = sv.iter().filter(|&&s| s > rank_tol).count();
    if rank < 8 {
        return Err(Error::DegenerateFit { rank });
    }
    let (min_idx, _) = sv.argmin();
    let h = v_t.row(min_idx);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);

    let t_dst_inv = t_dst.try_inverse().ok_or(Error::SingularHomography)?;
    Homography::new(t_dst_inv * hn * t_src, Provenance::Fitted)
}

/// Fits from homogeneous 3-vectors; each is dehomogenized first, so any
/// per-point scaling leaves the result unchanged.
pub fn fit_homogeneous<T: Real>(pairs: &[(Vector3<T>, Vector3<T>)]) -> Result<Homography<T>> {
    let mut pts = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        if a.z == T::zero() || b.z == T::zero() {
            return Err(invalid("point at infinity in correspondence"));
        }
        pts.push((Vector2::new(a.x / a.z, a.y / a.z), Vector2::new(b.x / b.z, b.y / b.z)));
    }
    fit_points(&pts)
}

/// Rotation and translation taking original-camera coordinates to
/// perturbed-camera coordinates: `X_hat = R X + t`.
pub fn relative_motion<T: Real>(cam: &CameraModel<T>, perturbed: &Pose<T>) -> Result<(Matrix3<T>, Vector3<T>)> {
    let r0 = cam.pose.ego_to_camera()?;
    let r1 = perturbed.ego_to_camera()?;
    let r = r1 * r0.transpose();
    let t0 = cam.pose.translation_vector();
    let t1 = perturbed.translation_vector();
    Ok((r, t1 - r * t0))
}

/// Plane-induced homography from the original to the perturbed image.
///
/// The plane is `n^T X = distance` in the original camera frame. When the
/// relative translation vanishes the result does not depend on the plane.
pub fn analytic_homography<T: Real>(
    cam: &CameraModel<T>,
    perturbed: &Pose<T>,
    plane_normal: &Vector3<T>,
    plane_distance: T,
) -> Result<Homography<T>> {
    if !(plane_distance > T::zero()) {
        return Err(invalid(format!("plane distance must be positive, got {plane_distance}")));
    }
    let n_norm = plane_normal.norm();
    if !(n_norm > T::zero()) {
        return Err(invalid("plane normal must be non-zero"));
    }
    let n = plane_normal / n_norm;
    let d = plane_distance / n_norm;
    let (r, t) = relative_motion(cam, perturbed)?;
    let k = cam.intrinsics.matrix();
    let k_inv = cam.intrinsics.inverse_matrix();
    let euclidean = r + t * n.transpose() / d;
    Homography::new(k * euclidean * k_inv, Provenance::Analytic)
}

/// The ego ground plane `z = 0` as `(n, d)` in the camera frame with `d > 0`,
/// or `None` when the optical centre lies on it.
pub fn ground_plane_in_camera<T: Real>(cam: &CameraModel<T>) -> Result<Option<(Vector3<T>, T)>> {
    let r = cam.pose.ego_to_camera()?;
    let mut n = r * Vector3::z();
    let mut d = n.dot(&cam.pose.translation_vector());
    if d.abs() <= T::eps().sqrt() {
        return Ok(None);
    }
    if d < T::zero() {
        n = -n;
        d = -d;
    }
    Ok(Some((n, d)))
}
