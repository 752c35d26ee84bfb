//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra as na;
use num_traits as nt;

/// Real scalar usable by the geometry, loss and metric code: `f32` or `f64`.
pub trait Real: na::RealField + Copy + nt::FromPrimitive + nt::ToPrimitive + nt::FloatConst + Send + Sync {
    /// Converts an `f64` literal. Infallible for the implemented types.
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the underlying type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let pi = T::pi();
    if a > -pi && a <= pi {
        return a;
    }
    let two_pi = T::two_pi();
    let mut w = a - two_pi * ((a + pi) / two_pi).floor();
    // floor puts w in [-pi, pi)
    if w <= -pi {
        w += two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_keeps_in_range_values() {
        for a in [0.0, 1.0, -1.0, PI, -PI + 1e-9] {
            assert_eq!(wrap_angle(a), a);
        }
    }

    #[test]
    fn wrap_maps_minus_pi_to_pi() {
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(2.0 * PI + 0.5) - 0.5).abs() < 1e-12);
        assert!((wrap_angle(-2.0 * PI - 0.5) + 0.5).abs() < 1e-12);
    }
}
