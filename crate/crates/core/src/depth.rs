//! Focal-length-independent depth.
//!
//! Metric depth `d_m` is rescaled by the ratio of the camera's pixel size
//! `s = sqrt(1/fx^2 + 1/fy^2)` to a reference pixel size `c`, so that
//! `d = (s / c) * d_m`. Two cameras with different focal lengths looking at
//! the same object then agree on `d` whenever they agree on its image size.

use serde::{Deserialize, Serialize};

use crate::camera::Intrinsics;
use crate::error::{invalid, Error, Result};
use crate::num::Real;

/// Reference focal length used when none is configured.
pub const DEFAULT_REFERENCE_FOCAL: f64 = 707.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Nuscenes,
    Waymo,
    Lyft,
}

impl Dataset {
    /// Metric depth range `[min, max]` in meters.
    pub fn depth_range(self) -> [f64; 2] {
        match self {
            Dataset::Nuscenes => [2.0, 90.0],
            Dataset::Waymo => [1.0, 60.0],
            Dataset::Lyft => [1.0, 90.0],
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "nuscenes" => Some(Dataset::Nuscenes),
            "waymo" => Some(Dataset::Waymo),
            "lyft" => Some(Dataset::Lyft),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthDecouplingConfig<T> {
    /// Pixel size `c` at the reference focal length.
    pub reference_pixel_size: T,
    pub metric_depth_range: [T; 2],
}

impl<T: Real> DepthDecouplingConfig<T> {
    pub fn new(reference_pixel_size: T, metric_depth_range: [T; 2]) -> Result<Self> {
        let cfg = Self { reference_pixel_size, metric_depth_range };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `c = sqrt(2) / f_ref`, the pixel size of a square-pixel camera at `f_ref`.
    pub fn from_reference_focal(f_ref: T, metric_depth_range: [T; 2]) -> Result<Self> {
        if !(f_ref > T::zero()) {
            return Err(invalid(format!("reference focal must be positive, got {f_ref}")));
        }
        Self::new(T::lit(2.0).sqrt() / f_ref, metric_depth_range)
    }

    pub fn for_dataset(dataset: Dataset) -> Self {
        let [lo, hi] = dataset.depth_range();
        Self::from_reference_focal(T::lit(DEFAULT_REFERENCE_FOCAL), [T::lit(lo), T::lit(hi)]).expect("preset ranges are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.metric_depth_range;
        if !(self.reference_pixel_size > T::zero()) {
            return Err(invalid("reference pixel size must be positive"));
        }
        if !(lo > T::zero() && lo < hi) {
            return Err(invalid(format!("depth range must satisfy 0 < min < max, got [{lo}, {hi}]")));
        }
        Ok(())
    }
}

impl<T: Real> Default for DepthDecouplingConfig<T> {
    fn default() -> Self {
        Self::for_dataset(Dataset::Nuscenes)
    }
}

/// `s = sqrt(1/fx^2 + 1/fy^2)`.
pub fn pixel_size<T: Real>(intr: &Intrinsics<T>) -> Result<T> {
    focal_pixel_size(intr.fx, intr.fy)
}

pub fn focal_pixel_size<T: Real>(fx: T, fy: T) -> Result<T> {
    if !(fx > T::zero() && fy > T::zero()) {
        return Err(invalid(format!("focal lengths must be positive, got fx={fx} fy={fy}")));
    }
    Ok((T::one() / (fx * fx) + T::one() / (fy * fy)).sqrt())
}

pub fn metric_to_scale_invariant<T: Real>(metric_depth: T, intr: &Intrinsics<T>, cfg: &DepthDecouplingConfig<T>) -> Result<T> {
    let [lo, hi] = cfg.metric_depth_range;
    if !(metric_depth >= lo && metric_depth <= hi) {
        return Err(Error::OutOfRange { value: metric_depth.to_f64_lossy(), min: lo.to_f64_lossy(), max: hi.to_f64_lossy() });
    }
    Ok(pixel_size(intr)? / cfg.reference_pixel_size * metric_depth)
}

pub fn scale_invariant_to_metric<T: Real>(depth: T, intr: &Intrinsics<T>, cfg: &DepthDecouplingConfig<T>) -> Result<T> {
    if !(depth > T::zero()) {
        return Err(invalid(format!("scale-invariant depth must be positive, got {depth}")));
    }
    Ok(cfg.reference_pixel_size / pixel_size(intr)? * depth)
}

/// Intrinsics after resizing the image by `(r_x, r_y)`.
///
/// Focal length and principal point scale with their axis; the image size is
/// rounded half-up.
pub fn resize_intrinsics<T: Real>(intr: &Intrinsics<T>, r_x: T, r_y: T) -> Result<Intrinsics<T>> {
    if !(r_x > T::zero() && r_y > T::zero()) {
        return Err(invalid(format!("resize rates must be positive, got ({r_x}, {r_y})")));
    }
    let round_half_up = |len: u32, r: T| -> Result<u32> {
        let v = (T::from_u32(len).unwrap() * r + T::lit(0.5)).floor();
        v.to_u32().filter(|&n| n > 0).ok_or_else(|| invalid("resized image is empty"))
    };
    Intrinsics::new(
        intr.fx * r_x,
        intr.fy * r_y,
        intr.px * r_x,
        intr.py * r_y,
        round_half_up(intr.width, r_x)?,
        round_half_up(intr.height, r_y)?,
    )
}
