use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::Pose;
use crate::error::{invalid, Result};
use crate::num::Real;

/// Half-widths of the symmetric intervals the three angle offsets are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRange<T> {
    pub d_yaw: T,
    pub d_pitch: T,
    pub d_roll: T,
    #[serde(default)]
    pub seed: u64,
}

impl<T: Real> PerturbationRange<T> {
    pub fn new(d_yaw: T, d_pitch: T, d_roll: T, seed: u64) -> Result<Self> {
        let r = Self { d_yaw, d_pitch, d_roll, seed };
        r.validate()?;
        Ok(r)
    }

    pub fn zero(seed: u64) -> Self {
        Self { d_yaw: T::zero(), d_pitch: T::zero(), d_roll: T::zero(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.d_yaw, self.d_pitch, self.d_roll].iter().all(|&w| w >= T::zero() && w.is_finite()) {
            Ok(())
        } else {
            Err(invalid("perturbation half-widths must be finite and non-negative"))
        }
    }
}

impl<T: Real> Default for PerturbationRange<T> {
    fn default() -> Self {
        Self { d_yaw: T::lit(0.02), d_pitch: T::lit(0.01), d_roll: T::lit(0.02), seed: 0 }
    }
}

/// Generator for one camera. Each camera index gets its own ChaCha stream, so
/// draws never depend on the order cameras are processed in.
pub fn camera_rng(seed: u64, camera_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(camera_index as u64);
    rng
}

fn symmetric<T: Real, R: Rng + ?Sized>(rng: &mut R, half_width: T) -> T {
    let u: f64 = rng.gen();
    T::lit(2.0 * u - 1.0) * half_width
}

/// Adds uniform offsets in `[-d, d]` to yaw, pitch and roll (drawn in that
/// order). Translation is left untouched.
pub fn perturb_pose<T: Real, R: Rng + ?Sized>(pose: &Pose<T>, range: &PerturbationRange<T>, rng: &mut R) -> Pose<T> {
    let dy = symmetric(rng, range.d_yaw);
    let dp = symmetric(rng, range.d_pitch);
    let dr = symmetric(rng, range.d_roll);
    pose.with_angles(pose.yaw + dy, pose.pitch + dp, pose.roll + dr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose() -> Pose<f64> {
        Pose::new(0.3, -0.05, 0.01, [0.1, 1.5, -0.7])
    }

    #[test]
    fn zero_range_is_identity() {
        let mut rng = camera_rng(5, 0);
        let p = perturb_pose(&pose(), &PerturbationRange::zero(5), &mut rng);
        assert_eq!(p, pose());
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let range = PerturbationRange::new(0.08, 0.04, 0.02, 11).unwrap();
        let a = perturb_pose(&pose(), &range, &mut camera_rng(11, 3));
        let b = perturb_pose(&pose(), &range, &mut camera_rng(11, 3));
        assert_eq!(a.yaw.to_bits(), b.yaw.to_bits());
        assert_eq!(a.pitch.to_bits(), b.pitch.to_bits());
        assert_eq!(a.roll.to_bits(), b.roll.to_bits());
        let c = perturb_pose(&pose(), &range, &mut camera_rng(11, 4));
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_statistics() {
        let hw = 0.02;
        let range = PerturbationRange::new(0.0, hw, 0.0, 1).unwrap();
        let mut rng = camera_rng(1, 0);
        let base = Pose::identity();
        let n = 10_000;
        let draws: Vec<f64> = (0..n).map(|_| perturb_pose(&base, &range, &mut rng).pitch).collect();
        let (lo, hi) = draws.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(lo >= -hw && hi <= hw);
        let mean = draws.iter().sum::<f64>() / n as f64;
        // std of U(-a, a) is a / sqrt(3)
        let sigma_mean = hw / 3f64.sqrt() / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma_mean, "mean {mean}");
    }

    #[test]
    fn rejects_negative_width() {
        assert!(PerturbationRange::new(-0.1, 0.0, 0.0, 0).is_err());
    }
}
