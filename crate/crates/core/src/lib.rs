//! Multi-camera 3D detection geometry: pinhole cameras, focal-invariant
//! depth, perspective augmentation by homography warping, an ordinal
//! focal-length domain loss and BEV detection metrics.
//!
//! Everything numeric is generic over [`Real`]; `f64` and `f32` aliases are
//! provided below.

// `!(x > 0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod boxes;
pub mod camera;
pub mod depth;
pub mod error;
pub mod metrics;
pub mod num;
pub mod ordinal;
pub mod raster;
pub mod reference;
pub mod scene;
pub mod selftest;

pub use augment::homography::{analytic_homography, fit_homography, Homography, Provenance};
pub use augment::pairs::{collect_pairs, MatchedPairSet};
pub use augment::perturb::{perturb_pose, PerturbationRange};
pub use augment::{augment_camera, augment_scene, AugmentedView};
pub use boxes::Box3D;
pub use camera::{project_point, CameraModel, Intrinsics, Pose};
pub use depth::{metric_to_scale_invariant, pixel_size, scale_invariant_to_metric, Dataset, DepthDecouplingConfig};
pub use error::{Error, Result};
pub use metrics::{evaluate, DetectionRecord, MetricConfig, MetricReport};
pub use num::Real;
pub use ordinal::{ordinal_loss, ordinal_loss_grad, DomainLabel, OrdinalDomainScheme};
pub use raster::Raster;
pub use scene::{generate_synthetic_scene, RunConfig, Scene};

pub type Intrinsics64 = Intrinsics<f64>;
pub type Pose64 = Pose<f64>;
pub type CameraModel64 = CameraModel<f64>;
pub type Box3D64 = Box3D<f64>;
pub type Homography64 = Homography<f64>;
pub type Scene64 = Scene<f64>;
pub type RunConfig64 = RunConfig<f64>;
pub type DetectionRecord64 = DetectionRecord<f64>;
pub type MetricReport64 = MetricReport<f64>;

pub type Intrinsics32 = Intrinsics<f32>;
pub type Pose32 = Pose<f32>;
pub type CameraModel32 = CameraModel<f32>;
pub type Box3D32 = Box3D<f32>;
pub type Homography32 = Homography<f32>;
pub type Scene32 = Scene<f32>;
pub type RunConfig32 = RunConfig<f32>;
pub type DetectionRecord32 = DetectionRecord<f32>;
pub type MetricReport32 = MetricReport<f32>;
