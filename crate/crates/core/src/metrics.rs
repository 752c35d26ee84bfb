//! Single-class detection metrics on the ground plane: center-distance AP,
//! true-positive errors (translation, scale, orientation) and the reduced
//! detection score NDS*.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boxes::Box3D;
use crate::error::{invalid, Error, Result};
use crate::num::Real;

/// Recall grid resolution for AP integration.
pub const RECALL_GRID: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord<T> {
    pub sample_id: String,
    #[serde(rename = "box")]
    pub bbox: Box3D<T>,
}

impl<T: Real> DetectionRecord<T> {
    pub fn new(sample_id: impl Into<String>, bbox: Box3D<T>) -> Self {
        Self { sample_id: sample_id.into(), bbox }
    }

    fn score(&self) -> T {
        self.bbox.score.unwrap_or(T::zero())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig<T> {
    pub distance_thresholds: Vec<T>,
    pub tp_threshold: T,
    pub range_limit: T,
    pub recall_floor: T,
    pub precision_floor: T,
}

impl<T: Real> Default for MetricConfig<T> {
    fn default() -> Self {
        Self {
            distance_thresholds: [0.5, 1.0, 2.0, 4.0].map(T::lit).to_vec(),
            tp_threshold: T::lit(2.0),
            range_limit: T::lit(50.0),
            recall_floor: T::lit(0.1),
            precision_floor: T::lit(0.1),
        }
    }
}

impl<T: Real> MetricConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let th = &self.distance_thresholds;
        if th.is_empty() || !th.iter().all(|&t| t > T::zero()) || th.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("distance thresholds must be positive and strictly ascending"));
        }
        if !th.contains(&self.tp_threshold) {
            return Err(invalid("tp_threshold must be one of the distance thresholds"));
        }
        if !(self.range_limit > T::zero()) {
            return Err(invalid("range limit must be positive"));
        }
        for f in [self.recall_floor, self.precision_floor] {
            if !(f >= T::zero() && f < T::one()) {
                return Err(invalid("recall and precision floors must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAp<T> {
    pub threshold: T,
    pub ap: T,
    pub true_positives: usize,
    pub false_positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub num_gt: usize,
    pub num_pred: usize,
    /// True positives at the TP-error threshold.
    pub num_tp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport<T> {
    #[serde(rename = "mAP")]
    pub map: T,
    #[serde(rename = "mATE")]
    pub mate: T,
    #[serde(rename = "mASE")]
    pub mase: T,
    #[serde(rename = "mAOE")]
    pub maoe: T,
    pub nds_star: T,
    pub per_threshold_ap: Vec<ThresholdAp<T>>,
    pub match_counts: MatchCounts,
}

impl<T: Real> MetricReport<T> {
    /// Fixed-width text summary.
    pub fn table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<10}{:>10}\n", "metric", "value"));
        for (name, v) in
            [("mAP", self.map), ("mATE", self.mate), ("mASE", self.mase), ("mAOE", self.maoe), ("NDS*", self.nds_star)]
        {
            s.push_str(&format!("{:<10}{:>10.4}\n", name, v.to_f64_lossy()));
        }
        for t in &self.per_threshold_ap {
            s.push_str(&format!("{:<10}{:>10.4}\n", format!("AP@{}", t.threshold.to_f64_lossy()), t.ap.to_f64_lossy()));
        }
        let c = &self.match_counts;
        s.push_str(&format!("{:<10}{:>10}\n{:<10}{:>10}\n{:<10}{:>10}\n", "gt", c.num_gt, "pred", c.num_pred, "tp", c.num_tp));
        s
    }
}

/// Outcome for one detection, listed in ranking order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOutcome<T> {
    pub det_index: usize,
    pub gt_index: Option<usize>,
    pub distance: Option<T>,
}

/// Ground-plane distance between box centres.
pub fn center_distance<T: Real>(a: &Box3D<T>, b: &Box3D<T>) -> T {
    let dx = a.center[0] - b.center[0];
    let dy = a.center[1] - b.center[1];
    (dx * dx + dy * dy).sqrt()
}

/// Detection indices by descending score; ties by sample id, then input order.
pub fn ranking<T: Real>(dets: &[DetectionRecord<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&dets[a], &dets[b]);
        db.score()
            .partial_cmp(&da.score())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| da.sample_id.cmp(&db.sample_id))
            .then(a.cmp(&b))
    });
    order
}

/// Greedy matching in ranking order. Each detection takes the nearest
/// still-unmatched ground truth of its sample if that distance is strictly
/// below `threshold`; equal distances go to the lower ground-truth index.
pub fn match_detections<T: Real>(gts: &[DetectionRecord<T>], dets: &[DetectionRecord<T>], threshold: T) -> Vec<MatchOutcome<T>> {
    let mut by_sample: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in gts.iter().enumerate() {
        by_sample.entry(g.sample_id.as_str()).or_default().push(i);
    }
    let mut taken = vec![false; gts.len()];
    ranking(dets)
        .into_iter()
        .map(|di| {
            let det = &dets[di];
            let mut best: Option<(usize, T)> = None;
            for &gi in by_sample.get(det.sample_id.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
                if taken[gi] {
                    continue;
                }
                let d = center_distance(&gts[gi].bbox, &det.bbox);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((gi, d));
                }
            }
            match best {
                Some((gi, d)) if d < threshold => {
                    taken[gi] = true;
                    MatchOutcome { det_index: di, gt_index: Some(gi), distance: Some(d) }
                }
                _ => MatchOutcome { det_index: di, gt_index: None, distance: None },
            }
        })
        .collect()
}

/// Precision envelope on the recall grid: at each grid recall `r`, the best
/// precision reached at any recall `>= r`, or 0 if `r` is never reached.
pub fn interpolated_precision<T: Real>(outcomes: &[MatchOutcome<T>], num_gt: usize) -> Vec<T> {
    let n = T::from_usize(num_gt).unwrap();
    let mut tp = 0usize;
    let mut points = Vec::with_capacity(outcomes.len());
    for (rank, m) in outcomes.iter().enumerate() {
        if m.gt_index.is_some() {
            tp += 1;
        }
        let recall = T::from_usize(tp).unwrap() / n;
        let precision = T::from_usize(tp).unwrap() / T::from_usize(rank + 1).unwrap();
        points.push((recall, precision));
    }
    // running max from the right
    let mut best = T::zero();
    for p in points.iter_mut().rev() {
        best = best.max(p.1);
        p.1 = best;
    }
    let steps = T::from_usize(RECALL_GRID - 1).unwrap();
    let mut j = 0;
    (0..RECALL_GRID)
        .map(|i| {
            let r = T::from_usize(i).unwrap() / steps;
            while j < points.len() && points[j].0 < r {
                j += 1;
            }
            points.get(j).map_or(T::zero(), |p| p.1)
        })
        .collect()
}

/// AP from an interpolated precision curve: grid bins strictly above the
/// recall floor, precision shifted down by the precision floor and clipped at
/// zero, averaged and rescaled by `1 / (1 - precision_floor)` so a perfect
/// detector scores 1.
pub fn ap_from_curve<T: Real>(curve: &[T], recall_floor: T, precision_floor: T) -> T {
    let steps = T::from_usize(RECALL_GRID - 1).unwrap();
    let first = (recall_floor * steps).round().to_usize().unwrap_or(0) + 1;
    let bins = &curve[first.min(curve.len())..];
    if bins.is_empty() {
        return T::zero();
    }
    let sum = bins.iter().map(|&p| (p - precision_floor).max(T::zero())).fold(T::zero(), |a, b| a + b);
    (sum / T::from_usize(bins.len()).unwrap() / (T::one() - precision_floor)).min(T::one())
}

pub fn average_precision<T: Real>(
    gts: &[DetectionRecord<T>],
    dets: &[DetectionRecord<T>],
    threshold: T,
    cfg: &MetricConfig<T>,
) -> Result<T> {
    if gts.is_empty() {
        return Err(Error::UndefinedAp);
    }
    let outcomes = match_detections(gts, dets, threshold);
    let curve = interpolated_precision(&outcomes, gts.len());
    Ok(ap_from_curve(&curve, cfg.recall_floor, cfg.precision_floor))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpErrors<T> {
    pub ate: T,
    pub ase: T,
    pub aoe: T,
    pub count: usize,
}

/// `1 - IoU` after aligning centres and headings.
pub fn scale_error<T: Real>(gt: &Box3D<T>, det: &Box3D<T>) -> T {
    let vol = |d: &[T; 3]| d[0] * d[1] * d[2];
    let overlap = (0..3).map(|i| gt.dims[i].min(det.dims[i])).fold(T::one(), |a, b| a * b);
    let union = vol(&gt.dims) + vol(&det.dims) - overlap;
    T::one() - overlap / union
}

/// Smallest absolute yaw difference, in `[0, pi]`.
pub fn orientation_error<T: Real>(gt: &Box3D<T>, det: &Box3D<T>) -> T {
    let two_pi = T::two_pi();
    let mut d = (det.yaw - gt.yaw) % two_pi;
    if d < T::zero() {
        d += two_pi;
    }
    d.min(two_pi - d)
}

/// Mean errors over matched pairs; each error is 1 when nothing matched.
pub fn tp_errors<T: Real>(gts: &[DetectionRecord<T>], dets: &[DetectionRecord<T>], outcomes: &[MatchOutcome<T>]) -> TpErrors<T> {
    let (mut ate, mut ase, mut aoe, mut n) = (T::zero(), T::zero(), T::zero(), 0usize);
    for m in outcomes {
        let Some(gi) = m.gt_index else { continue };
        let (g, d) = (&gts[gi].bbox, &dets[m.det_index].bbox);
        ate += center_distance(g, d);
        ase += scale_error(g, d);
        aoe += orientation_error(g, d);
        n += 1;
    }
    if n == 0 {
        return TpErrors { ate: T::one(), ase: T::one(), aoe: T::one(), count: 0 };
    }
    let count = T::from_usize(n).unwrap();
    TpErrors { ate: ate / count, ase: ase / count, aoe: aoe / count, count: n }
}

/// `(3 mAP + sum over {mATE, mASE, mAOE} of (1 - min(1, e))) / 6`.
pub fn nds_star<T: Real>(map: T, mate: T, mase: T, maoe: T) -> T {
    let tp: T = [mate, mase, maoe].iter().map(|&e| T::one() - e.min(T::one())).fold(T::zero(), |a, b| a + b);
    (T::lit(3.0) * map + tp) / T::lit(6.0)
}

fn in_range<T: Real>(records: &[DetectionRecord<T>], limit: T) -> Vec<DetectionRecord<T>> {
    records.iter().filter(|r| r.bbox.ground_range() <= limit).cloned().collect()
}

/// Full report. Both sets are range-filtered first; thresholds are evaluated
/// in parallel and reassembled in configuration order.
pub fn evaluate<T: Real>(
    gts: &[DetectionRecord<T>],
    dets: &[DetectionRecord<T>],
    cfg: &MetricConfig<T>,
) -> Result<MetricReport<T>> {
    cfg.validate()?;
    for r in gts.iter().chain(dets) {
        r.bbox.validate()?;
    }
    if let Some(d) = dets.iter().find(|d| d.bbox.score.is_none()) {
        return Err(invalid(format!("detection in sample {:?} has no score", d.sample_id)));
    }
    let gts = in_range(gts, cfg.range_limit);
    let dets = in_range(dets, cfg.range_limit);
    if gts.is_empty() {
        return Err(Error::UndefinedAp);
    }

    let per_threshold: Vec<(ThresholdAp<T>, Vec<MatchOutcome<T>>)> = cfg
        .distance_thresholds
        .par_iter()
        .map(|&threshold| {
            let outcomes = match_detections(&gts, &dets, threshold);
            let curve = interpolated_precision(&outcomes, gts.len());
            let ap = ap_from_curve(&curve, cfg.recall_floor, cfg.precision_floor);
            let tp = outcomes.iter().filter(|m| m.gt_index.is_some()).count();
            (ThresholdAp { threshold, ap, true_positives: tp, false_positives: outcomes.len() - tp }, outcomes)
        })
        .collect();

    let map = per_threshold.iter().map(|(t, _)| t.ap).fold(T::zero(), |a, b| a + b) / T::from_usize(per_threshold.len()).unwrap();
    let tp_outcomes =
        &per_threshold.iter().find(|(t, _)| t.threshold == cfg.tp_threshold).expect("validated: tp threshold is listed").1;
    let errs = tp_errors(&gts, &dets, tp_outcomes);

    Ok(MetricReport {
        map,
        mate: errs.ate,
        mase: errs.ase,
        maoe: errs.aoe,
        nds_star: nds_star(map, errs.ate, errs.ase, errs.aoe),
        match_counts: MatchCounts { num_gt: gts.len(), num_pred: dets.len(), num_tp: errs.count },
        per_threshold_ap: per_threshold.into_iter().map(|(t, _)| t).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn gt(sample: &str, x: f64, y: f64) -> DetectionRecord<f64> {
        DetectionRecord::new(sample, Box3D::new([x, y, 0.8], [4.0, 2.0, 1.6], 0.0))
    }

    fn det(sample: &str, x: f64, y: f64, score: f64) -> DetectionRecord<f64> {
        DetectionRecord::new(sample, Box3D::new([x, y, 0.8], [4.0, 2.0, 1.6], 0.0).with_score(score))
    }

    #[test]
    fn matching_examples() {
        let gts = [gt("s", 10.0, 0.0)];
        let m = match_detections(&gts, &[det("s", 10.5, 0.0, 0.9)], 2.0);
        assert_eq!(m[0].gt_index, Some(0));
        assert!((m[0].distance.unwrap() - 0.5).abs() < 1e-12);
        let m = match_detections(&gts, &[det("s", 13.0, 0.0, 0.9)], 2.0);
        assert_eq!(m[0].gt_index, None);
        let dets = [det("s", 10.2, 0.0, 0.3), det("s", 10.9, 0.0, 0.8)];
        let m = match_detections(&gts, &dets, 2.0);
        assert_eq!((m[0].det_index, m[0].gt_index), (1, Some(0)));
        assert_eq!((m[1].det_index, m[1].gt_index), (0, None));
    }

    #[test]
    fn matching_respects_samples() {
        let m = match_detections(&[gt("a", 0.0, 0.0)], &[det("b", 0.0, 0.0, 1.0)], 2.0);
        assert_eq!(m[0].gt_index, None);
    }

    #[test]
    fn equal_scores_break_ties_by_sample_then_order() {
        let dets = [det("b", 0.0, 0.0, 0.5), det("a", 0.0, 0.0, 0.5), det("a", 1.0, 0.0, 0.5), det("c", 0.0, 0.0, 0.9)];
        assert_eq!(ranking(&dets), vec![3, 1, 2, 0]);
    }

    #[test]
    fn ap_trivial_cases() {
        let cfg = MetricConfig::default();
        let gts = [gt("s", 10.0, 0.0)];
        assert_eq!(average_precision(&gts, &[det("s", 10.0, 0.0, 1.0)], 2.0, &cfg).unwrap(), 1.0);
        assert_eq!(average_precision(&gts, &[], 2.0, &cfg).unwrap(), 0.0);
        assert_eq!(average_precision(&[], &[det("s", 0.0, 0.0, 1.0)], 2.0, &cfg), Err(Error::UndefinedAp));
    }

    #[test]
    fn ap_two_gts_one_hit_then_miss() {
        // ranked: TP (r=1/2, p=1), FP (r=1/2, p=1/2); envelope is 1 up to r=0.5.
        // Bins 0.11..=0.50 are 40 of the 90 bins above the floor.
        let cfg = MetricConfig::default();
        let gts = [gt("s", 10.0, 0.0), gt("s", -20.0, 5.0)];
        let dets = [det("s", 10.1, 0.0, 0.9), det("s", 30.0, 30.0, 0.4)];
        let ap = average_precision(&gts, &dets, 2.0, &cfg).unwrap();
        assert!((ap - 40.0 / 90.0).abs() < 1e-12);
    }

    #[test]
    fn tp_error_examples() {
        let g = Box3D::<f64>::new([0.0, 0.0, 0.75], [4.0, 2.0, 1.5], 0.0);
        assert_eq!(scale_error(&g, &g), 0.0);
        let small = Box3D::new([0.0, 0.0, 0.75], [2.0, 2.0, 1.5], 0.0);
        assert!((scale_error(&g, &small) - 0.5).abs() < 1e-15);
        let turned = Box3D::new([0.0, 0.0, 0.75], [4.0, 2.0, 1.5], FRAC_PI_2);
        assert!((orientation_error(&g, &turned) - FRAC_PI_2).abs() < 1e-15);
        let a = Box3D::new([0.0; 3], [1.0; 3], PI - 0.1);
        let b = Box3D::new([0.0; 3], [1.0; 3], -PI + 0.1);
        assert!((orientation_error(&a, &b) - 0.2).abs() < 1e-12);
        let none = tp_errors::<f64>(&[], &[], &[]);
        assert_eq!((none.ate, none.ase, none.aoe), (1.0, 1.0, 1.0));
    }

    #[test]
    fn nds_star_examples() {
        assert!((nds_star::<f64>(0.040, 1.303, 0.265, 0.790) - 0.1775).abs() < 1e-12);
        assert!((nds_star::<f64>(0.602, 0.471, 0.152, 0.078) - 0.684).abs() < 0.0005);
        assert_eq!(nds_star(1.0, 0.0, 0.0, 0.0), 1.0);
        assert_eq!(nds_star(0.0, 1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn evaluate_perfect_and_empty() {
        let gts: Vec<_> = (0..5).map(|i| gt("s", 5.0 * i as f64, 1.0)).collect();
        let dets: Vec<_> = gts.iter().map(|g| DetectionRecord { bbox: g.bbox.clone().with_score(1.0), ..g.clone() }).collect();
        let r = evaluate(&gts, &dets, &MetricConfig::default()).unwrap();
        assert_eq!((r.map, r.mate, r.mase, r.maoe, r.nds_star), (1.0, 0.0, 0.0, 0.0, 1.0));
        let r = evaluate(&gts, &[], &MetricConfig::default()).unwrap();
        assert_eq!((r.map, r.mate, r.mase, r.maoe, r.nds_star), (0.0, 1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn range_filter_drops_far_boxes() {
        let far = gt("s", 50.01, 0.0);
        let near = gt("s", 10.0, 0.0);
        let r = evaluate(&[near.clone(), far], &[det("s", 10.0, 0.0, 1.0)], &MetricConfig::default()).unwrap();
        assert_eq!(r.match_counts.num_gt, 1);
        assert_eq!(r.map, 1.0);
        let edge = gt("s", 30.0, 40.0);
        assert_eq!(edge.bbox.ground_range(), 50.0);
        let r = evaluate(&[near, edge], &[], &MetricConfig::default()).unwrap();
        assert_eq!(r.match_counts.num_gt, 2);
    }

    #[test]
    fn config_validation() {
        let c = MetricConfig::<f64> { tp_threshold: 3.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = MetricConfig::<f64> { distance_thresholds: vec![1.0, 0.5, 2.0], ..Default::default() };
        assert!(c.validate().is_err());
        assert!(evaluate(&[gt("s", 0.0, 0.0)], &[gt("s", 0.0, 0.0)], &MetricConfig::default()).is_err());
    }

    fn scene() -> impl Strategy<Value = (Vec<DetectionRecord<f64>>, Vec<DetectionRecord<f64>>)> {
        let gts = proptest::collection::vec((-40.0f64..40.0, -40.0f64..40.0), 1..8);
        let dets = proptest::collection::vec((-40.0f64..40.0, -40.0f64..40.0, 0.05f64..1.0), 0..10);
        (gts, dets).prop_map(|(g, d)| {
            let gts = g.into_iter().map(|(x, y)| gt("s", x, y)).collect();
            let dets = d.into_iter().map(|(x, y, s)| det("s", x, y, s)).collect();
            (gts, dets)
        })
    }

    proptest! {
        #[test]
        fn low_false_positive_never_changes_ap((gts, dets) in scene()) {
            let cfg = MetricConfig::default();
            let before = average_precision(&gts, &dets, 2.0, &cfg).unwrap();
            let mut more = dets.clone();
            more.push(det("s", 500.0, 500.0, 0.01));
            prop_assert_eq!(average_precision(&gts, &more, 2.0, &cfg).unwrap(), before);
        }

        #[test]
        fn extra_true_positive_never_lowers_ap((gts, dets) in scene(), score in 0.0f64..1.0) {
            let cfg = MetricConfig::default();
            let outcomes = match_detections(&gts, &dets, 2.0);
            let used: Vec<usize> = outcomes.iter().filter_map(|m| m.gt_index).collect();
            // an unmatched gt that no other gt sits on top of
            let free = (0..gts.len()).find(|i| !used.contains(i)
                && gts.iter().enumerate().all(|(j, g)| j == *i || center_distance(&g.bbox, &gts[*i].bbox) > 0.0));
            if let Some(i) = free {
                let before = average_precision(&gts, &dets, 2.0, &cfg).unwrap();
                let mut more = dets.clone();
                more.push(DetectionRecord { bbox: gts[i].bbox.clone().with_score(score), ..gts[i].clone() });
                prop_assert!(average_precision(&gts, &more, 2.0, &cfg).unwrap() >= before);
            }
        }

        #[test]
        fn equal_scores_are_order_independent((gts, dets) in scene(), rot in 0usize..10) {
            // one detection per sample, all tied on score: the sample id decides the ranking
            let gts: Vec<_> = gts.into_iter().enumerate().map(|(i, mut g)| { g.sample_id = format!("s{}", i % 3); g }).collect();
            let flat: Vec<_> = dets.into_iter().enumerate().map(|(i, mut d)| {
                d.bbox.score = Some(0.5);
                d.sample_id = format!("s{i}");
                d
            }).collect();
            let mut rotated = flat.clone();
            if !rotated.is_empty() {
                let k = rot % rotated.len();
                rotated.rotate_left(k);
            }
            let key = |dets: &[DetectionRecord<f64>]| -> Vec<(String, Option<usize>)> {
                match_detections(&gts, dets, 2.0).iter().map(|m| (dets[m.det_index].sample_id.clone(), m.gt_index)).collect()
            };
            prop_assert_eq!(key(&flat), key(&rotated));
            let cfg = MetricConfig::default();
            prop_assert_eq!(
                average_precision(&gts, &flat, 2.0, &cfg).unwrap(),
                average_precision(&gts, &rotated, 2.0, &cfg).unwrap()
            );
        }
    }
}
