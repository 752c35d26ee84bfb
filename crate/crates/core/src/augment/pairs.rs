use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::boxes::Box3D;
use crate::camera::{project_point, CameraModel, Pose, Projection};
use crate::num::Real;

/// Pixel correspondences between the original and the perturbed view of one camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPairSet<T> {
    pub camera_id: String,
    /// `(q, q_hat)`: original pixel, perturbed pixel.
    pub pairs: Vec<([T; 2], [T; 2])>,
}

impl<T: Real> MatchedPairSet<T> {
    pub fn new(camera_id: impl Into<String>) -> Self {
        Self { camera_id: camera_id.into(), pairs: Vec::new() }
    }

    pub fn from_points(camera_id: impl Into<String>, pairs: &[(Vector2<T>, Vector2<T>)]) -> Self {
        Self { camera_id: camera_id.into(), pairs: pairs.iter().map(|(a, b)| ([a.x, a.y], [b.x, b.y])).collect() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (Vector2<T>, Vector2<T>)> + '_ {
        self.pairs.iter().map(|(a, b)| (Vector2::from(*a), Vector2::from(*b)))
    }
}

fn visible<T: Real>(cam: &CameraModel<T>, q: &nalgebra::Vector3<T>) -> Option<Projection<T>> {
    // a point exactly on the image plane is just not visible here
    project_point(cam, q).ok().filter(|p| p.is_visible(&cam.intrinsics))
}

/// Projects the five bottom anchors of every box with the original and the
/// perturbed pose, keeping a pair only when both projections are in front of
/// the camera and inside the image.
pub fn collect_pairs<T: Real>(cam: &CameraModel<T>, perturbed: &Pose<T>, boxes: &[Box3D<T>]) -> MatchedPairSet<T> {
    let moved = cam.with_pose(*perturbed);
    let mut set = MatchedPairSet::new(cam.camera_id.clone());
    for q in boxes.iter().flat_map(|b| b.bottom_points()) {
        let (Some(a), Some(b)) = (visible(cam, &q), visible(&moved, &q)) else {
            continue;
        };
        set.pairs.push(([a.pixel.x, a.pixel.y], [b.pixel.x, b.pixel.y]));
    }
    set
}
