//! Focal-length pseudo-domains and their ordinal classification loss.
//!
//! `[alpha, beta]` is cut into `K` equal sub-intervals by `K + 1` thresholds
//! `t_i = alpha + (beta - alpha) * i / K`. Together with the two open ranges
//! outside the interval this gives `K + 2` ordered labels. The classifier
//! emits one logit pair per threshold; `P^k = softmax(y_2k, y_2k+1)[0]` is the
//! probability that the focal length is below `t_k`.

use serde::{Deserialize, Serialize};

use crate::depth::Dataset;
use crate::error::{invalid, Result};
use crate::num::Real;

/// Thresholds are derived from `(alpha, beta, num_subintervals)`. When
/// deserializing they may be omitted; if present they must match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeFields<T>", bound(deserialize = "T: Real + Deserialize<'de>", serialize = "T: Serialize"))]
pub struct OrdinalDomainScheme<T> {
    pub alpha: T,
    pub beta: T,
    pub num_subintervals: usize,
    pub thresholds: Vec<T>,
}

#[derive(Deserialize)]
struct SchemeFields<T> {
    alpha: T,
    beta: T,
    num_subintervals: usize,
    #[serde(default = "no_thresholds")]
    thresholds: Option<Vec<T>>,
}

fn no_thresholds<T>() -> Option<Vec<T>> {
    None
}

impl<T: Real> TryFrom<SchemeFields<T>> for OrdinalDomainScheme<T> {
    type Error = crate::error::Error;

    fn try_from(f: SchemeFields<T>) -> Result<Self> {
        let scheme = Self::new(f.alpha, f.beta, f.num_subintervals)?;
        match f.thresholds {
            Some(t) if t != scheme.thresholds => Err(invalid("thresholds do not match alpha, beta and num_subintervals")),
            _ => Ok(scheme),
        }
    }
}

impl<T: Real> OrdinalDomainScheme<T> {
    pub fn new(alpha: T, beta: T, num_subintervals: usize) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha < beta) {
            return Err(invalid(format!("need alpha < beta, got [{alpha}, {beta}]")));
        }
        if num_subintervals < 1 {
            return Err(invalid("need at least one sub-interval"));
        }
        let k = T::from_usize(num_subintervals).unwrap();
        let thresholds = (0..=num_subintervals).map(|i| alpha + (beta - alpha) * T::from_usize(i).unwrap() / k).collect();
        Ok(Self { alpha, beta, num_subintervals, thresholds })
    }

    /// Threshold layout used for each dataset's pseudo-domains.
    pub fn for_dataset(dataset: Dataset) -> Self {
        let (a, b, k) = match dataset {
            Dataset::Nuscenes => (500.0, 750.0, 5),
            Dataset::Waymo => (600.0, 900.0, 6),
            Dataset::Lyft => (500.0, 650.0, 3),
        };
        Self::new(T::lit(a), T::lit(b), k).expect("preset schemes are valid")
    }

    pub fn num_thresholds(&self) -> usize {
        self.num_subintervals + 1
    }

    pub fn num_categories(&self) -> usize {
        self.num_subintervals + 2
    }

    pub fn num_logits(&self) -> usize {
        2 * self.num_thresholds()
    }

    /// Label for a focal length. Intervals are half-open, so a focal equal to
    /// `t_i` gets label `i + 1`.
    pub fn assign_label(&self, focal: T) -> Result<DomainLabel> {
        if !(focal > T::zero()) || !focal.is_finite() {
            return Err(invalid(format!("focal length must be positive, got {focal}")));
        }
        Ok(DomainLabel(self.thresholds.iter().filter(|&&t| focal >= t).count()))
    }

    /// Re-derives the scheme fields and checks they agree with the stored thresholds.
    pub fn validate(&self) -> Result<()> {
        let fresh = Self::new(self.alpha, self.beta, self.num_subintervals)?;
        if fresh.thresholds != self.thresholds {
            return Err(invalid("thresholds do not match alpha, beta and K"));
        }
        Ok(())
    }
}

impl<T: Real> Default for OrdinalDomainScheme<T> {
    fn default() -> Self {
        Self::for_dataset(Dataset::Nuscenes)
    }
}

/// Ordered pseudo-domain label in `0..=K+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DomainLabel(pub usize);

/// `1` when the label says the focal length is below threshold `k`.
pub fn below_threshold(k: usize, label: DomainLabel) -> bool {
    label.0 <= k
}

/// `log(1 + exp(x))` without overflow.
fn softplus<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn check<T: Real>(logits: &[T], label: DomainLabel) -> Result<usize> {
    if logits.is_empty() || !logits.len().is_multiple_of(2) {
        return Err(invalid(format!("logit count must be a positive even number, got {}", logits.len())));
    }
    let thresholds = logits.len() / 2;
    if label.0 > thresholds {
        return Err(invalid(format!("label {} exceeds {} for {} thresholds", label.0, thresholds, thresholds)));
    }
    Ok(thresholds)
}

/// `P^k` for every threshold.
pub fn threshold_probabilities<T: Real>(logits: &[T]) -> Vec<T> {
    logits.chunks_exact(2).map(|p| sigmoid(p[0] - p[1])).collect()
}

/// Negative log-likelihood of the per-threshold binary decisions:
///
/// `-sum_k [g_k log P^k + (1 - g_k) log(1 - P^k)]`, `g_k = [label <= k]`.
///
/// The label range is `0..=logits.len() / 2`.
pub fn ordinal_loss<T: Real>(logits: &[T], label: DomainLabel) -> Result<T> {
    check(logits, label)?;
    Ok(logits
        .chunks_exact(2)
        .enumerate()
        .map(|(k, pair)| {
            let z = pair[0] - pair[1];
            // -log P = softplus(-z), -log(1 - P) = softplus(z)
            if below_threshold(k, label) {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .fold(T::zero(), |a, b| a + b))
}

/// Checks `logits` against a scheme before evaluating the loss.
pub fn scheme_loss<T: Real>(scheme: &OrdinalDomainScheme<T>, logits: &[T], label: DomainLabel) -> Result<T> {
    if logits.len() != scheme.num_logits() {
        return Err(invalid(format!("expected {} logits, got {}", scheme.num_logits(), logits.len())));
    }
    ordinal_loss(logits, label)
}

/// Gradient of [`ordinal_loss`]: `sigmoid(z_k) - g_k` on `y_2k` and its
/// negation on `y_2k+1`.
pub fn ordinal_loss_grad<T: Real>(logits: &[T], label: DomainLabel) -> Result<Vec<T>> {
    check(logits, label)?;
    let mut grad = Vec::with_capacity(logits.len());
    for (k, pair) in logits.chunks_exact(2).enumerate() {
        let g = if below_threshold(k, label) { T::one() } else { T::zero() };
        let d = sigmoid(pair[0] - pair[1]) - g;
        grad.push(d);
        grad.push(-d);
    }
    Ok(grad)
}

/// Label implied by the logits: the number of thresholds the classifier
/// believes the focal length is at or above (`P^k <= 1/2`).
pub fn decode_label<T: Real>(logits: &[T]) -> DomainLabel {
    DomainLabel(threshold_probabilities(logits).into_iter().filter(|&p| p <= T::lit(0.5)).count())
}

/// Backward pass of a gradient reversal layer: `-lambda * grad`. The forward
/// pass is the identity and has no counterpart here.
pub fn reverse_gradient<T: Real>(grad: &[T], lambda: T) -> Vec<T> {
    grad.iter().map(|&g| -(lambda * g)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn deserialization_derives_thresholds() {
        let s: OrdinalDomainScheme<f64> = serde_json::from_str(r#"{"alpha": 600, "beta": 900, "num_subintervals": 6}"#).unwrap();
        assert_eq!(s, OrdinalDomainScheme::for_dataset(Dataset::Waymo));
        let back: OrdinalDomainScheme<f64> = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let wrong = r#"{"alpha": 500, "beta": 750, "num_subintervals": 5, "thresholds": [500, 600]}"#;
        assert!(serde_json::from_str::<OrdinalDomainScheme<f64>>(wrong).is_err());
        assert!(serde_json::from_str::<OrdinalDomainScheme<f64>>(r#"{"alpha": 5, "beta": 1, "num_subintervals": 2}"#).is_err());
    }

    /// Logits whose decisions agree with `label`, with margin `m` per pair.
    fn saturated(thresholds: usize, label: usize, m: f64) -> Vec<f64> {
        (0..thresholds).flat_map(|k| if label <= k { [m, 0.0] } else { [0.0, m] }).collect()
    }

    #[test]
    fn thresholds_follow_uniform_discretization() {
        let s = OrdinalDomainScheme::new(500.0, 750.0, 5).unwrap();
        assert_eq!(s.thresholds, vec![500.0, 550.0, 600.0, 650.0, 700.0, 750.0]);
        let s = OrdinalDomainScheme::new(0.0, 1.0, 4).unwrap();
        assert_eq!((s.num_thresholds(), s.num_categories()), (5, 6));
        let s = OrdinalDomainScheme::new(3.0, 9.0, 1).unwrap();
        assert_eq!((s.thresholds.clone(), s.num_categories()), (vec![3.0, 9.0], 3));
    }

    #[test]
    fn dataset_presets() {
        let w = OrdinalDomainScheme::<f64>::for_dataset(Dataset::Waymo);
        assert_eq!(w.thresholds, vec![600.0, 650.0, 700.0, 750.0, 800.0, 850.0, 900.0]);
        let l = OrdinalDomainScheme::<f64>::for_dataset(Dataset::Lyft);
        assert_eq!(l.thresholds, vec![500.0, 550.0, 600.0, 650.0]);
    }

    #[test]
    fn scheme_rejects_bad_arguments() {
        assert!(OrdinalDomainScheme::new(750.0, 500.0, 5).is_err());
        assert!(OrdinalDomainScheme::new(500.0, 500.0, 5).is_err());
        assert!(OrdinalDomainScheme::new(500.0, 750.0, 0).is_err());
        let mut s = OrdinalDomainScheme::new(500.0, 750.0, 5).unwrap();
        s.thresholds[2] = 601.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn label_examples() {
        let s = OrdinalDomainScheme::new(500.0, 750.0, 5).unwrap();
        assert_eq!(s.assign_label(480.0).unwrap(), DomainLabel(0));
        assert_eq!(s.assign_label(720.0).unwrap(), DomainLabel(5));
        assert_eq!(s.assign_label(800.0).unwrap(), DomainLabel(6));
        for (i, &t) in s.thresholds.iter().enumerate() {
            assert_eq!(s.assign_label(t).unwrap(), DomainLabel(i + 1));
        }
        assert!(s.assign_label(0.0).is_err());
    }

    #[test]
    fn saturated_correct_prediction_has_tiny_loss() {
        // K = 1: two thresholds, label 0 means "below" on both
        let logits = [20.0, 0.0, 20.0, 0.0];
        assert!(ordinal_loss(&logits, DomainLabel(0)).unwrap() < 1e-8);
        let g = ordinal_loss_grad(&logits, DomainLabel(0)).unwrap();
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6);
    }

    #[test]
    fn uniform_logits() {
        for thresholds in 2..8 {
            let logits = vec![0.3; 2 * thresholds];
            for label in 0..=thresholds {
                let l = ordinal_loss(&logits, DomainLabel(label)).unwrap();
                assert!((l - thresholds as f64 * LN_2).abs() < 1e-12);
                let g = ordinal_loss_grad(&logits, DomainLabel(label)).unwrap();
                for k in 0..thresholds {
                    let expected = if label <= k { -0.5 } else { 0.5 };
                    assert_eq!(g[2 * k], expected);
                    assert_eq!(g[2 * k + 1], -expected);
                }
            }
        }
    }

    #[test]
    fn top_label_uses_complement_terms_only() {
        let logits: [f64; 6] = [0.4, -1.0, 2.0, 0.5, -0.3, 0.1];
        let expected: f64 = threshold_probabilities(&logits).iter().map(|p| -(1.0 - p).ln()).sum();
        let l = ordinal_loss(&logits, DomainLabel(3)).unwrap();
        assert!((l - expected).abs() < 1e-12);
    }

    #[test]
    fn loss_is_stable_at_extremes() {
        let logits: [f64; 4] = [-800.0, 800.0, 900.0, -900.0];
        let l = ordinal_loss(&logits, DomainLabel(1)).unwrap();
        assert!(l.is_finite() && l < 1e-12);
        let l = ordinal_loss(&logits, DomainLabel(2)).unwrap();
        assert!((l - 1800.0).abs() < 1e-9);
    }

    #[test]
    fn length_errors() {
        assert!(ordinal_loss(&[0.0, 1.0, 2.0], DomainLabel(0)).is_err());
        assert!(ordinal_loss::<f64>(&[], DomainLabel(0)).is_err());
        assert!(ordinal_loss(&[0.0, 1.0], DomainLabel(2)).is_err());
        let s = OrdinalDomainScheme::new(500.0, 750.0, 5).unwrap();
        assert!(scheme_loss(&s, &[0.0; 10], DomainLabel(0)).is_err());
        assert!(scheme_loss(&s, &[0.0; 12], DomainLabel(6)).is_ok());
    }

    #[test]
    fn gradient_reversal() {
        let g = [1.0, -2.0, 0.5];
        assert_eq!(reverse_gradient(&g, 1.0), vec![-1.0, 2.0, -0.5]);
        assert!(reverse_gradient(&g, 0.0).iter().all(|&v| v == 0.0));
        assert_eq!(reverse_gradient(&reverse_gradient(&g, 1.0), 1.0), g.to_vec());
    }

    proptest! {
        #[test]
        fn labels_are_monotone(a in 1.0f64..2000.0, b in 1.0f64..2000.0) {
            let s = OrdinalDomainScheme::new(500.0, 750.0, 5).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(s.assign_label(lo).unwrap() <= s.assign_label(hi).unwrap());
        }

        #[test]
        fn saturated_logits_prefer_their_label(k in 1usize..8, label_seed in 0usize..100, other_seed in 0usize..100) {
            let thresholds = k + 1;
            let label = label_seed % (thresholds + 1);
            let other = other_seed % (thresholds + 1);
            let logits = saturated(thresholds, label, 12.0);
            let own = ordinal_loss(&logits, DomainLabel(label)).unwrap();
            prop_assert!(own <= ordinal_loss(&logits, DomainLabel(other)).unwrap());
            prop_assert_eq!(decode_label(&logits), DomainLabel(label));
        }
    }
}
