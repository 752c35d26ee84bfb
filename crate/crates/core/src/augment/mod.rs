//! Camera-pose perturbation with homography-warped imagery.
//!
//! For each camera the angles are jittered, the bottom anchors of every
//! ground-truth box are projected under both poses, and a homography fitted to
//! the surviving pairs warps the image into the perturbed view.

pub mod homography;
pub mod pairs;
pub mod perturb;
pub mod warp;

use rayon::prelude::*;

use crate::boxes::Box3D;
use crate::camera::{CameraModel, Pose};
use crate::error::{invalid, Error, Result};
use crate::num::Real;
use crate::raster::Raster;

use homography::{fit_homography, Homography};
use pairs::{collect_pairs, MatchedPairSet};
use perturb::{camera_rng, perturb_pose, PerturbationRange};

#[derive(Debug, Clone)]
pub struct AugmentedView<T: Real> {
    pub camera_id: String,
    pub image: Raster,
    /// Pose the output image corresponds to. Equals the input pose whenever
    /// the identity fallback was taken.
    pub pose: Pose<T>,
    /// Pose that was drawn, whether or not it was applied.
    pub sampled_pose: Pose<T>,
    pub homography: Homography<T>,
    pub pairs: MatchedPairSet<T>,
}

/// Augments one camera with the given generator stream.
pub fn augment_camera<T: Real, R: rand::Rng + ?Sized>(
    cam: &CameraModel<T>,
    image: &Raster,
    boxes: &[Box3D<T>],
    range: &PerturbationRange<T>,
    rng: &mut R,
) -> Result<AugmentedView<T>> {
    let sampled = perturb_pose(&cam.pose, range, rng);
    let pairs = collect_pairs(cam, &sampled, boxes);
    let homography = match fit_homography(&pairs) {
        Ok(h) => h,
        // too few independent constraints, same outcome as too few pairs
        Err(Error::DegenerateFit { .. }) => Homography::identity_fallback(),
        Err(e) => return Err(e),
    };
    let out_size = (image.width, image.height);
    let image = warp::warp_image(image, &homography, out_size)?;
    let pose = if homography.is_identity_fallback() { cam.pose } else { sampled };
    Ok(AugmentedView { camera_id: cam.camera_id.clone(), image, pose, sampled_pose: sampled, homography, pairs })
}

/// Runs [`augment_camera`] over a rig. Camera `i` draws from stream `i` of
/// `range.seed`, so the output is identical for any thread count.
pub fn augment_scene<T: Real>(
    rig: &[CameraModel<T>],
    images: &[Raster],
    boxes: &[Box3D<T>],
    range: &PerturbationRange<T>,
) -> Result<Vec<AugmentedView<T>>> {
    if rig.len() != images.len() {
        return Err(invalid(format!("{} cameras but {} images", rig.len(), images.len())));
    }
    range.validate()?;
    rig.par_iter()
        .zip(images.par_iter())
        .enumerate()
        .map(|(i, (cam, img))| augment_camera(cam, img, boxes, range, &mut camera_rng(range.seed, i)))
        .collect()
}
