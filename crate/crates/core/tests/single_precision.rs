//! The pipeline instantiated at `f32`.

use bevgeo::{
    augment_scene, evaluate, generate_synthetic_scene, DetectionRecord32, MetricConfig, OrdinalDomainScheme, PerturbationRange,
    Raster,
};

#[test]
fn scene_augment_and_evaluate_in_f32() {
    let scene = generate_synthetic_scene::<f32>(4, 6, 25, "ring", &OrdinalDomainScheme::default()).unwrap();
    let images: Vec<Raster> = (0..6).map(|_| Raster::from_fn(704, 256, 1, |x, y, _| ((x + y) % 256) as u8).unwrap()).collect();
    let views =
        augment_scene(&scene.cameras, &images, &scene.boxes, &PerturbationRange { seed: 2, ..Default::default() }).unwrap();
    assert_eq!(views.len(), 6);
    assert!(views.iter().any(|v| !v.homography.is_identity_fallback()));

    let gts: Vec<DetectionRecord32> = scene.boxes.iter().map(|b| DetectionRecord32::new("s", b.clone())).collect();
    let dets: Vec<DetectionRecord32> = gts.iter().map(|g| DetectionRecord32::new("s", g.bbox.clone().with_score(0.5))).collect();
    let r = evaluate(&gts, &dets, &MetricConfig::default()).unwrap();
    assert!((r.map - 1.0).abs() < 1e-5 && r.mate < 1e-5 && (r.nds_star - 1.0).abs() < 1e-5, "{r:?}");
}
