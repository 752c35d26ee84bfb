//! Built-in consistency checks: every closed-form or brute-force oracle the
//! library is validated against, runnable from the command line.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::homography::{analytic_homography, fit_homography, fit_points, Homography};
use crate::augment::pairs::collect_pairs;
use crate::augment::perturb::{perturb_pose, PerturbationRange};
use crate::boxes::Box3D;
use crate::camera::{
    axes_matrix, euler_to_rotation, project_camera_point, project_point, rotation_to_euler, CameraModel, Intrinsics, Pose,
};
use crate::depth::{focal_pixel_size, metric_to_scale_invariant, pixel_size, scale_invariant_to_metric, DepthDecouplingConfig};
use crate::metrics::{evaluate, nds_star, DetectionRecord, MetricConfig};
use crate::ordinal::{ordinal_loss, ordinal_loss_grad, DomainLabel, OrdinalDomainScheme};
use crate::reference::{REPORTED_SCORES, ROUNDING_TOLERANCE};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelfTestReport {
    pub checks: Vec<Check>,
}

impl SelfTestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("[{}] {:<32} {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        s.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        s
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

const SEED: u64 = 20_240_601;

/// A camera with its centre at the ego origin, a perturbed pose and boxes
/// spread in depth and height so anchors are not coplanar with the centre.
/// Perturbing such a camera is a pure rotation.
pub fn pure_rotation_case<R: Rng>(rng: &mut R) -> (CameraModel<f64>, Pose<f64>, Vec<Box3D<f64>>) {
    let f = rng.gen_range(400.0..1600.0);
    let k = Intrinsics::new(f, f * rng.gen_range(0.97..1.03), rng.gen_range(320.0..384.0), rng.gen_range(110.0..146.0), 704, 256)
        .expect("sampled intrinsics are valid");
    let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let pose = Pose::new(-heading, rng.gen_range(-0.1..0.1), rng.gen_range(-0.05..0.05), [0.0; 3]);
    let cam = CameraModel::new("oracle", k, pose).expect("valid camera");
    let range = PerturbationRange::new(0.08, 0.04, 0.08, 0).unwrap();
    let perturbed = perturb_pose(&cam.pose, &range, rng);
    let n_boxes = rng.gen_range(2..6);
    let boxes = (0..n_boxes)
        .map(|_| {
            let depth: f64 = rng.gen_range(8.0..40.0);
            let lateral = rng.gen_range(-0.3..0.3) * depth;
            let (s, c) = heading.sin_cos();
            let center = [c * depth - s * lateral, s * depth + c * lateral, rng.gen_range(-2.0..3.0)];
            Box3D::new(
                center,
                [rng.gen_range(3.5..5.0), rng.gen_range(1.6..2.2), rng.gen_range(1.3..2.0)],
                rng.gen_range(-3.0..3.0),
            )
        })
        .collect();
    (cam, perturbed, boxes)
}

/// Fitted versus closed-form homography over `cases` pure-rotation samples.
/// Returns the largest Frobenius gap and how many cases were compared.
pub fn homography_oracle(cases: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < cases {
        let (cam, perturbed, boxes) = pure_rotation_case(&mut rng);
        let pairs = collect_pairs(&cam, &perturbed, &boxes);
        if pairs.len() < 4 {
            continue;
        }
        let Ok(fitted) = fit_homography(&pairs) else { continue };
        // any plane: the map does not depend on it without translation
        let analytic = analytic_homography(&cam, &perturbed, &Vector3::new(0.0, 0.0, 1.0), 10.0).unwrap();
        worst = worst.max(fitted.distance(&analytic));
        done += 1;
    }
    (worst, done)
}

fn golden_nds() -> Check {
    let worst = REPORTED_SCORES.iter().map(|r| (nds_star(r.map, r.mate, r.mase, r.maoe) - r.nds_star).abs()).fold(0.0, f64::max);
    check("nds-star-golden", worst <= ROUNDING_TOLERANCE, format!("{} rows, max gap {worst:.5}", REPORTED_SCORES.len()))
}

fn homography_checks() -> Vec<Check> {
    let (worst, n) = homography_oracle(200, SEED);
    let fallback = {
        let p = nalgebra::Vector2::new(10.0, 20.0);
        let h = fit_points(&[(p, p), (p * 2.0, p), (p * 3.0, p)]).unwrap();
        h.is_identity_fallback() && h == Homography::identity_fallback()
    };
    vec![
        check("homography-dlt-vs-analytic", worst < 1e-6, format!("{n} cases, max Frobenius gap {worst:.2e}")),
        check("homography-identity-fallback", fallback, "3 pairs -> identity".into()),
    ]
}

fn camera_checks() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (y, p, r): (f64, f64, f64) = (rng.gen_range(-3.1..3.1), rng.gen_range(-1.56..1.56), rng.gen_range(-3.1..3.1));
        let e = rotation_to_euler(&euler_to_rotation(y, p, r).unwrap()).unwrap();
        worst = worst.max((e.yaw - y).abs()).max((e.pitch - p).abs()).max((e.roll - r).abs());
    }
    let k = Intrinsics::new(1000.0, 1000.0, 352.0, 128.0, 704, 256).unwrap();
    let cam = CameraModel::new("c", k, Pose::identity()).unwrap();
    let q = axes_matrix::<f64>().transpose() * Vector3::new(1.0, 0.0, 10.0);
    let proj = project_point(&cam, &q).unwrap();
    let proj_ok =
        (proj.pixel.x - 452.0).abs() < 1e-12 && (proj.pixel.y - 128.0).abs() < 1e-12 && (proj.depth - 10.0).abs() < 1e-12;
    vec![
        check("euler-round-trip", worst < 1e-9, format!("1000 samples, max error {worst:.2e}")),
        check("projection-offset", proj_ok, format!("pixel ({:.3}, {:.3})", proj.pixel.x, proj.pixel.y)),
    ]
}

fn depth_checks() -> Vec<Check> {
    let k = |fx: f64, fy: f64| Intrinsics::new(fx, fy, 352.0, 128.0, 704, 256).unwrap();
    let s = pixel_size(&k(1000.0, 1000.0)).unwrap();
    let s345 = focal_pixel_size::<f64>(3.0, 4.0).unwrap();
    let px_ok = (s - 2f64.sqrt() / 1000.0).abs() < 1e-15 && (s345 - 5.0 / 12.0).abs() < 1e-15;

    let cfg = DepthDecouplingConfig::<f64>::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let intr = k(rng.gen_range(300.0..2000.0), rng.gen_range(300.0..2000.0));
        let dm = rng.gen_range(2.0..=90.0);
        let d = metric_to_scale_invariant(dm, &intr, &cfg).unwrap();
        let back = scale_invariant_to_metric(d, &intr, &cfg).unwrap();
        worst = worst.max(((back - dm) / dm).abs());
    }

    // object of height 1.5 m at 30 m: pixel height x scale-invariant depth
    let products: Vec<f64> = [400.0, 800.0, 1600.0]
        .iter()
        .map(|&f| {
            let intr = k(f, f);
            let top = project_camera_point(&intr, &Vector3::new(0.5, -1.0, 30.0)).unwrap().pixel.y;
            let bottom = project_camera_point(&intr, &Vector3::new(0.5, 0.5, 30.0)).unwrap().pixel.y;
            (bottom - top) * metric_to_scale_invariant(30.0, &intr, &cfg).unwrap()
        })
        .collect();
    let spread = products.iter().map(|p| (p - products[0]).abs()).fold(0.0, f64::max);

    let scheme = OrdinalDomainScheme::new(500.0, 750.0, 5).unwrap();
    vec![
        check("pixel-size", px_ok, format!("s(1000, 1000) = {s:.8e}")),
        check("depth-round-trip", worst < 1e-12, format!("1000 samples, max relative error {worst:.2e}")),
        check("size-depth-invariance", spread < 1e-9, format!("spread {spread:.2e}")),
        check(
            "nuscenes-thresholds",
            scheme.thresholds == [500.0, 550.0, 600.0, 650.0, 700.0, 750.0],
            format!("{:?}", scheme.thresholds),
        ),
    ]
}

/// Largest max-norm relative gap between the analytic gradient and central
/// differences with step `h`, over `cases` random problems.
pub fn gradient_check(cases: usize, h: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let k = rng.gen_range(1..9);
        let logits: Vec<f64> = (0..2 * (k + 1)).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let label = DomainLabel(rng.gen_range(0..=k + 1));
        let analytic = ordinal_loss_grad(&logits, label).unwrap();
        let numeric: Vec<f64> = (0..logits.len())
            .map(|i| {
                let mut up = logits.clone();
                let mut down = logits.clone();
                up[i] += h;
                down[i] -= h;
                (ordinal_loss(&up, label).unwrap() - ordinal_loss(&down, label).unwrap()) / (2.0 * h)
            })
            .collect();
        let diff = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).abs()).fold(0.0, f64::max);
        let scale = analytic.iter().chain(&numeric).map(|v| v.abs()).fold(0.0, f64::max);
        worst = worst.max(diff / scale.max(f64::MIN_POSITIVE));
    }
    worst
}

fn ordinal_checks() -> Vec<Check> {
    let worst = gradient_check(100, 1e-5, SEED + 3);
    let uniform = (1..8)
        .map(|k| {
            (ordinal_loss(&vec![0.0; 2 * (k + 1)], DomainLabel(k / 2)).unwrap() - (k + 1) as f64 * std::f64::consts::LN_2).abs()
        })
        .fold(0.0, f64::max);
    let fig = OrdinalDomainScheme::new(500.0, 700.0, 4).unwrap();
    vec![
        check("ordinal-gradient", worst < 1e-5, format!("100 cases, max relative error {worst:.2e}")),
        check("ordinal-uniform-loss", uniform < 1e-12, format!("max gap {uniform:.2e}")),
        check(
            "ordinal-four-subintervals",
            fig.num_thresholds() == 5 && fig.num_categories() == 6,
            format!("{} thresholds, {} categories", fig.num_thresholds(), fig.num_categories()),
        ),
    ]
}

/// Three ground truths: one detected with a 0.75 m offset and 0.2 rad yaw
/// error, one detected with half its length, one missed.
pub fn metric_fixture() -> (Vec<DetectionRecord<f64>>, Vec<DetectionRecord<f64>>) {
    let gts = vec![
        DetectionRecord::new("s0", Box3D::new([10.0, 0.0, 1.0], [4.0, 2.0, 2.0], 0.0)),
        DetectionRecord::new("s0", Box3D::new([0.0, 20.0, 1.0], [4.0, 2.0, 2.0], 0.0)),
        DetectionRecord::new("s0", Box3D::new([-15.0, -5.0, 1.0], [4.0, 2.0, 2.0], 0.0)),
    ];
    let dets = vec![
        DetectionRecord::new("s0", Box3D::new([10.75, 0.0, 1.0], [4.0, 2.0, 2.0], 0.2).with_score(0.9)),
        DetectionRecord::new("s0", Box3D::new([0.0, 20.0, 1.0], [2.0, 2.0, 2.0], 0.0).with_score(0.8)),
    ];
    (gts, dets)
}

fn metric_checks() -> Vec<Check> {
    let cfg = MetricConfig::default();
    let (gts, dets) = metric_fixture();
    let r = evaluate(&gts, &dets, &cfg).unwrap();
    // AP@0.5 = 23 bins of 4/9 over 90, other thresholds 56 of 90 bins at 1
    let map = (23.0 * 4.0 / 9.0 / 90.0 + 3.0 * 56.0 / 90.0) / 4.0;
    let fixture_ok = (r.map - map).abs() < 1e-12
        && (r.mate - 0.375).abs() < 1e-12
        && (r.mase - 0.25).abs() < 1e-12
        && (r.maoe - 0.1).abs() < 1e-12;
    let perfect_dets: Vec<_> =
        gts.iter().map(|g| DetectionRecord::new(g.sample_id.clone(), g.bbox.clone().with_score(1.0))).collect();
    let p = evaluate(&gts, &perfect_dets, &cfg).unwrap();
    let e = evaluate(&gts, &[], &cfg).unwrap();
    vec![
        check(
            "metrics-fixture",
            fixture_ok,
            format!("mAP {:.6} mATE {:.3} mASE {:.3} mAOE {:.3}", r.map, r.mate, r.mase, r.maoe),
        ),
        check(
            "metrics-perfect",
            (p.map, p.mate, p.mase, p.maoe, p.nds_star) == (1.0, 0.0, 0.0, 0.0, 1.0),
            format!("NDS* {}", p.nds_star),
        ),
        check("metrics-empty", e.nds_star == 0.0, format!("NDS* {}", e.nds_star)),
    ]
}

pub fn run_selftest() -> SelfTestReport {
    let mut checks = vec![golden_nds()];
    checks.extend(camera_checks());
    checks.extend(depth_checks());
    checks.extend(homography_checks());
    checks.extend(ordinal_checks());
    checks.extend(metric_checks());
    SelfTestReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes_and_is_stable() {
        let a = run_selftest();
        assert!(a.all_passed(), "{}", a.render());
        assert_eq!(a, run_selftest());
    }
}
