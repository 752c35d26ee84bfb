//! Scene container, run configuration and the synthetic rig generator.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::perturb::PerturbationRange;
use crate::boxes::Box3D;
use crate::camera::{CameraModel, Intrinsics, Pose};
use crate::depth::DepthDecouplingConfig;
use crate::error::{invalid, Error, Result};
use crate::metrics::MetricConfig;
use crate::num::Real;
use crate::ordinal::OrdinalDomainScheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene<T> {
    pub scene_id: String,
    pub cameras: Vec<CameraModel<T>>,
    pub boxes: Vec<Box3D<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_paths: Option<Vec<String>>,
}

impl<T: Real> Scene<T> {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for cam in &self.cameras {
            if !seen.insert(cam.camera_id.as_str()) {
                return Err(invalid(format!("duplicate camera id {:?}", cam.camera_id)));
            }
            cam.validate()?;
        }
        for b in &self.boxes {
            b.validate()?;
        }
        if let Some(paths) = &self.image_paths {
            if paths.len() != self.cameras.len() {
                return Err(invalid(format!("{} image paths for {} cameras", paths.len(), self.cameras.len())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig<T: Real> {
    pub seed: u64,
    pub perturbation: PerturbationRange<T>,
    pub depth: DepthDecouplingConfig<T>,
    pub scheme: OrdinalDomainScheme<T>,
    pub metrics: MetricConfig<T>,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            seed: 0,
            perturbation: PerturbationRange::default(),
            depth: DepthDecouplingConfig::default(),
            scheme: OrdinalDomainScheme::default(),
            metrics: MetricConfig::default(),
        }
    }
}

impl<T: Real> RunConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.perturbation.validate()?;
        self.depth.validate()?;
        self.scheme.validate()?;
        self.metrics.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RigStyle {
    /// Cameras evenly spread over the full circle.
    Ring,
    /// Cameras evenly spread over a forward-facing arc of +-1.6 rad.
    FrontArc,
}

impl RigStyle {
    pub const NAMES: &'static [&'static str] = &["ring", "front-arc"];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "ring" => Ok(RigStyle::Ring),
            "front-arc" => Ok(RigStyle::FrontArc),
            other => Err(Error::UnsupportedRigStyle { given: other.to_string(), supported: Self::NAMES.join(", ") }),
        }
    }

    /// Ego-frame viewing directions (radians, counter-clockwise from +x).
    pub fn headings(self, n: usize) -> Vec<f64> {
        match self {
            RigStyle::Ring => (0..n).map(|i| std::f64::consts::TAU * i as f64 / n as f64).collect(),
            RigStyle::FrontArc => {
                let half = 1.6;
                (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
            }
        }
    }
}

pub const IMAGE_WIDTH: u32 = 704;
pub const IMAGE_HEIGHT: u32 = 256;
const MOUNT_RADIUS: f64 = 1.0;
const MOUNT_HEIGHT: f64 = 1.6;
const SCENE_SALT: u64 = 0x5EED_5CE7E;

/// Pose that puts the optical centre at ego point `center` looking along
/// `heading` (radians from ego +x), tilted by `pitch` and `roll`.
pub fn mounted_pose<T: Real>(heading: T, pitch: T, roll: T, center: [T; 3]) -> Result<Pose<T>> {
    let pose = Pose::new(-heading, pitch, roll, [T::zero(); 3]);
    let t = -(pose.ego_to_camera()? * nalgebra::Vector3::from(center));
    Ok(Pose { translation: t.into(), ..pose })
}

/// Deterministic synthetic scene: a camera rig on a ring around the ego
/// origin with focal lengths drawn inside the scheme interval, plus boxes
/// resting on the ground within 50 m.
pub fn generate_synthetic_scene<T: Real>(
    seed: u64,
    n_cameras: usize,
    n_boxes: usize,
    rig_style: &str,
    scheme: &OrdinalDomainScheme<T>,
) -> Result<Scene<T>> {
    let style = RigStyle::parse(rig_style)?;
    if !(n_cameras == 5 || n_cameras == 6) {
        return Err(invalid(format!("rigs have 5 or 6 cameras, got {n_cameras}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SCENE_SALT);
    let (alpha, beta) = (scheme.alpha.to_f64_lossy(), scheme.beta.to_f64_lossy());

    let mut cameras = Vec::with_capacity(n_cameras);
    for (i, heading) in style.headings(n_cameras).into_iter().enumerate() {
        let f = rng.gen_range(alpha..=beta);
        let fy = f * rng.gen_range(0.995..=1.005);
        let px = IMAGE_WIDTH as f64 / 2.0 + rng.gen_range(-4.0..4.0);
        let py = IMAGE_HEIGHT as f64 / 2.0 + rng.gen_range(-4.0..4.0);
        let k = Intrinsics::new(T::lit(f), T::lit(fy), T::lit(px), T::lit(py), IMAGE_WIDTH, IMAGE_HEIGHT)?;
        let pitch = rng.gen_range(-0.02..0.02);
        let roll = rng.gen_range(-0.01..0.01);
        let center = [MOUNT_RADIUS * heading.cos(), MOUNT_RADIUS * heading.sin(), MOUNT_HEIGHT].map(T::lit);
        let pose = mounted_pose(T::lit(heading), T::lit(pitch), T::lit(roll), center)?;
        cameras.push(CameraModel::new(format!("cam{i}"), k, pose)?);
    }

    let mut boxes = Vec::with_capacity(n_boxes);
    while boxes.len() < n_boxes {
        let x: f64 = rng.gen_range(-50.0..50.0);
        let y: f64 = rng.gen_range(-50.0..50.0);
        let r = x.hypot(y);
        if !(4.0..=50.0).contains(&r) {
            continue;
        }
        let dims = [rng.gen_range(3.8..5.2), rng.gen_range(1.7..2.1), rng.gen_range(1.4..1.9)];
        let yaw = crate::num::wrap_angle(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        boxes.push(Box3D::new([x, y, dims[2] / 2.0].map(T::lit), dims.map(T::lit), T::lit(yaw)));
    }

    let scene = Scene { scene_id: format!("synthetic-{seed}"), cameras, boxes, image_paths: None };
    scene.validate()?;
    Ok(scene)
}
