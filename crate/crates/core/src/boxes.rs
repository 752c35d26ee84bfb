use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::num::Real;

/// Oriented 3D box in the ego frame. `center` is the geometric centre, so the
/// box rests on the ground when `center[2] == dims[2] / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Box3D<T> {
    pub center: [T; 3],
    pub dims: [T; 3],
    pub yaw: T,
    #[serde(default = "default_class")]
    pub class_id: String,
    #[serde(default = "no_score", skip_serializing_if = "Option::is_none")]
    pub score: Option<T>,
}

fn no_score<T>() -> Option<T> {
    None
}

fn default_class() -> String {
    "car".to_string()
}

impl<T: Real> Box3D<T> {
    pub fn new(center: [T; 3], dims: [T; 3], yaw: T) -> Self {
        Self { center, dims, yaw, class_id: default_class(), score: None }
    }

    pub fn with_score(mut self, score: T) -> Self {
        self.score = Some(score);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dims.iter().all(|&d| d > T::zero()) {
            return Err(invalid("box dimensions must be positive"));
        }
        if !(self.yaw > -T::pi() && self.yaw <= T::pi()) {
            return Err(invalid(format!("box yaw {} outside (-pi, pi]", self.yaw)));
        }
        if let Some(s) = self.score {
            if !(s >= T::zero() && s <= T::one()) {
                return Err(invalid(format!("score {s} outside [0, 1]")));
            }
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(invalid("box centre is not finite"));
        }
        Ok(())
    }

    /// Distance of the centre from the ego origin on the ground plane.
    pub fn ground_range(&self) -> T {
        (self.center[0] * self.center[0] + self.center[1] * self.center[1]).sqrt()
    }

    /// Bottom centre followed by the four bottom corners (counter-clockwise
    /// from the front-left corner when viewed from above).
    pub fn bottom_points(&self) -> [Vector3<T>; 5] {
        let half = T::lit(0.5);
        let [cx, cy, cz] = self.center;
        let z = cz - self.dims[2] * half;
        let (s, c) = self.yaw.sin_cos();
        let hx = self.dims[0] * half;
        let hy = self.dims[1] * half;
        let corner = |sx: T, sy: T| {
            let (lx, ly) = (sx * hx, sy * hy);
            Vector3::new(cx + c * lx - s * ly, cy + s * lx + c * ly, z)
        };
        let (p, n) = (T::one(), -T::one());
        [Vector3::new(cx, cy, z), corner(p, p), corner(n, p), corner(n, n), corner(p, n)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn sorted_xy(points: &[Vector3<f64>]) -> Vec<(i64, i64, i64)> {
        let mut v: Vec<_> =
            points.iter().map(|p| ((p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64, (p.z * 1e6).round() as i64)).collect();
        v.sort();
        v
    }

    #[test]
    fn axis_aligned_footprint() {
        let b = Box3D::new([0.0, 0.0, 1.0], [4.0, 2.0, 2.0], 0.0);
        let pts = b.bottom_points();
        assert_eq!(pts[0], Vector3::new(0.0, 0.0, 0.0));
        let expected: Vec<_> =
            [(2.0, 1.0), (-2.0, 1.0), (-2.0, -1.0), (2.0, -1.0)].iter().map(|&(x, y)| Vector3::new(x, y, 0.0)).collect();
        assert_eq!(sorted_xy(&pts[1..]), sorted_xy(&expected));
    }

    #[test]
    fn quarter_turn_swaps_extents() {
        let b = Box3D::new([0.0, 0.0, 1.0], [4.0, 2.0, 2.0], FRAC_PI_2);
        let pts = b.bottom_points();
        let expected: Vec<_> =
            [(1.0, 2.0), (-1.0, 2.0), (-1.0, -2.0), (1.0, -2.0)].iter().map(|&(x, y)| Vector3::new(x, y, 0.0)).collect();
        assert_eq!(sorted_xy(&pts[1..]), sorted_xy(&expected));
    }

    #[test]
    fn flat_box_bottom_center_is_center() {
        let b = Box3D { dims: [4.0, 2.0, 0.0], ..Box3D::new([3.0, -1.0, 0.7], [4.0, 2.0, 1.0], 0.3) };
        assert_eq!(b.bottom_points()[0], Vector3::new(3.0, -1.0, 0.7));
        assert!(b.validate().is_err());
    }

    #[test]
    fn validation() {
        assert!(Box3D::new([0.0; 3], [1.0; 3], 0.0).validate().is_ok());
        assert!(Box3D::new([0.0; 3], [1.0; 3], -std::f64::consts::PI).validate().is_err());
        assert!(Box3D::new([0.0; 3], [1.0; 3], 0.0).with_score(1.5).validate().is_err());
    }
}
