use nalgebra::{Matrix3, Vector3};

use crate::augment::homography::Homography;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::raster::Raster;

/// Source coordinates within this distance of an integer are snapped to it.
const GRID_SNAP: f64 = 1e-9;

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= GRID_SNAP {
        r
    } else {
        v
    }
}

/// Inverse-maps every output pixel through `H^-1` and samples the source
/// bilinearly. Pixels whose preimage falls outside the source are set to 0.
///
/// The identity fallback copies the input unchanged (cropped or zero-padded
/// to `out_size`).
pub fn warp_image<T: Real>(image: &Raster, h: &Homography<T>, out_size: (u32, u32)) -> Result<Raster> {
    let (out_w, out_h) = out_size;
    let mut out = Raster::new(out_w, out_h, image.channels)?;
    if h.is_identity_fallback() {
        for y in 0..out_h.min(image.height) {
            for x in 0..out_w.min(image.width) {
                for c in 0..image.channels {
                    let i = out.index(x, y, c);
                    out.data[i] = image.get(x, y, c);
                }
            }
        }
        return Ok(out);
    }

    let m: Matrix3<f64> = h.matrix().map(|v| v.to_f64_lossy());
    let inv = m.try_inverse().ok_or(Error::SingularHomography)?;
    let max_x = image.width as f64 - 1.0;
    let max_y = image.height as f64 - 1.0;
    for v in 0..out_h {
        for u in 0..out_w {
            let p = inv * Vector3::new(u as f64, v as f64, 1.0);
            if p.z == 0.0 {
                continue;
            }
            let x = snap(p.x / p.z);
            let y = snap(p.y / p.z);
            if !(x >= 0.0 && x <= max_x && y >= 0.0 && y <= max_y) {
                continue;
            }
            let (x0, y0) = (x.floor(), y.floor());
            let (ax, ay) = (x - x0, y - y0);
            let (x0, y0) = (x0 as u32, y0 as u32);
            let x1 = (x0 + 1).min(image.width - 1);
            let y1 = (y0 + 1).min(image.height - 1);
            for c in 0..image.channels {
                let p00 = image.get(x0, y0, c) as f64;
                let p10 = image.get(x1, y0, c) as f64;
                let p01 = image.get(x0, y1, c) as f64;
                let p11 = image.get(x1, y1, c) as f64;
                let val = (1.0 - ay) * ((1.0 - ax) * p00 + ax * p10) + ay * ((1.0 - ax) * p01 + ax * p11);
                let i = out.index(u, v, c);
                out.data[i] = val.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::homography::Provenance;
    use nalgebra::Vector2;

    fn pattern() -> Raster {
        Raster::from_fn(64, 40, 1, |x, y, _| ((x * 7 + y * 13) % 251) as u8).unwrap()
    }

    #[test]
    fn identity_matrix_reproduces_input() {
        let img = pattern();
        let h = Homography::<f64>::new(Matrix3::identity(), Provenance::Fitted).unwrap();
        assert_eq!(warp_image(&img, &h, (64, 40)).unwrap(), img);
        assert_eq!(warp_image(&img, &Homography::<f64>::identity_fallback(), (64, 40)).unwrap(), img);
    }

    #[test]
    fn horizontal_shift() {
        let img = Raster::from_fn(64, 40, 3, |x, y, c| ((x * 5 + y * 3 + c as u32 * 40) % 256) as u8).unwrap();
        let t = Matrix3::new(1.0, 0.0, 10.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        let h = Homography::<f64>::new(t, Provenance::Fitted).unwrap();
        let out = warp_image(&img, &h, (64, 40)).unwrap();
        for y in 0..40 {
            for c in 0..3 {
                for k in 10..64 {
                    assert_eq!(out.get(k, y, c), img.get(k - 10, y, c));
                }
                for k in 0..10 {
                    assert_eq!(out.get(k, y, c), 0);
                }
            }
        }
    }

    #[test]
    fn round_trip_of_smooth_gradient() {
        let img = Raster::from_fn(200, 120, 1, |x, y, _| (x as f64 * 0.9 + y as f64 * 0.6).round() as u8).unwrap();
        let m = Matrix3::new(1.01, 0.02, 3.5, -0.015, 0.99, -2.25, 1e-5, -2e-5, 1.0);
        let h = Homography::<f64>::new(m, Provenance::Fitted).unwrap();
        let back = warp_image(&warp_image(&img, &h, (200, 120)).unwrap(), &h.inverse().unwrap(), (200, 120)).unwrap();
        let inside = |p: Vector2<f64>| p.x >= 0.0 && p.x <= 199.0 && p.y >= 0.0 && p.y <= 119.0;
        let mut checked = 0;
        for y in 0..120 {
            for x in 0..200 {
                let p = Vector2::new(x as f64, y as f64);
                let fwd = h.apply(&p);
                // the forward pixel must sit inside the intermediate image with a
                // full bilinear footprint of valid samples around it
                let footprint_ok = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)].iter().all(|&(dx, dy)| {
                    let corner = Vector2::new(fwd.x.floor() + dx, fwd.y.floor() + dy);
                    inside(corner) && inside(h.inverse().unwrap().apply(&corner))
                });
                if !footprint_ok {
                    continue;
                }
                let diff = (back.get(x, y, 0) as i32 - img.get(x, y, 0) as i32).abs();
                assert!(diff <= 2, "({x}, {y}) differs by {diff}");
                checked += 1;
            }
        }
        assert!(checked > 15_000);
    }
}
