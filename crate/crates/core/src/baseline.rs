//! Threshold-based and rank-based comparison metrics.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::series::{extract_events, LabelSeries, ScoreSeries};

/// Default decision threshold applied to normalized scores.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Thresholded scores, `score >= threshold` marks a positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryPrediction(Vec<bool>);

impl BinaryPrediction {
    pub fn from_scores(scores: &ScoreSeries, threshold: f64) -> Self {
        Self(scores.values().iter().map(|&s| s >= threshold).collect())
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    /// Point adjustment: a ground-truth anomaly event with at least one
    /// positive becomes positive over its whole extent.
    pub fn point_adjusted(&self, labels: &LabelSeries) -> Self {
        let mut out = self.0.clone();
        for event in extract_events(labels).anomalies() {
            if out[event.range()].iter().any(|&p| p) {
                out[event.range()].fill(true);
            }
        }
        Self(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    pub params: BTreeMap<String, String>,
}

impl MetricValue {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, params: BTreeMap::new() }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_owned(), value.to_string());
        self
    }
}

/// True/false positive and false negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn pointwise(pred: &BinaryPrediction, labels: &LabelSeries) -> Self {
        let mut c = Confusion::default();
        for (&p, &y) in pred.values().iter().zip(labels.values()) {
            match (p, y == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
        c
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_lengths(scores: &ScoreSeries, labels: &LabelSeries) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(invalid(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    Ok(())
}

fn f1_value(name: &str, c: Confusion, threshold: f64) -> MetricValue {
    MetricValue::new(name, c.f1())
        .with_param("threshold", threshold)
        .with_param("precision", c.precision())
        .with_param("recall", c.recall())
}

/// Pointwise F1 of `score >= threshold`.
pub fn f1(scores: &ScoreSeries, labels: &LabelSeries, threshold: f64) -> Result<MetricValue> {
    check_lengths(scores, labels)?;
    let pred = BinaryPrediction::from_scores(scores, threshold);
    Ok(f1_value("f1", Confusion::pointwise(&pred, labels), threshold))
}

/// Pointwise F1 after point adjustment.
pub fn f1_pa(scores: &ScoreSeries, labels: &LabelSeries, threshold: f64) -> Result<MetricValue> {
    check_lengths(scores, labels)?;
    let pred = BinaryPrediction::from_scores(scores, threshold).point_adjusted(labels);
    Ok(f1_value("f1_pa", Confusion::pointwise(&pred, labels), threshold))
}

/// F1 where each ground-truth anomaly event counts once: one true positive
/// if any of its points is flagged, one false negative otherwise. False
/// positives are counted pointwise over normal time steps.
pub fn reduced_f1(scores: &ScoreSeries, labels: &LabelSeries, threshold: f64) -> Result<MetricValue> {
    check_lengths(scores, labels)?;
    let pred = BinaryPrediction::from_scores(scores, threshold);
    let mut c = Confusion::default();
    for event in extract_events(labels).anomalies() {
        if pred.values()[event.range()].iter().any(|&p| p) {
            c.tp += 1;
        } else {
            c.fn_ += 1;
        }
    }
    c.fp = pred.values().iter().zip(labels.values()).filter(|(&p, &y)| p && y == 0).count();
    Ok(f1_value("reduced_f1", c, threshold))
}

/// Probability that a random anomaly point outscores a random normal point,
/// ties counting one half. Computed from mid-ranks in `O(n log n)`.
pub fn auc_roc(scores: &ScoreSeries, labels: &LabelSeries) -> Result<MetricValue> {
    check_lengths(scores, labels)?;
    let positives = labels.anomaly_count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Undefined("AUC-ROC needs both anomaly and normal labels".into()));
    }
    let values = scores.values();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j share their average.
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        let tied_positives = order[i..j].iter().filter(|&&k| labels.values()[k] == 1).count();
        positive_rank_sum += mid_rank * tied_positives as f64;
        i = j;
    }
    let (p, n) = (positives as f64, negatives as f64);
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(MetricValue::new("auc_roc", u / (p * n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scores(v: &[f64]) -> ScoreSeries {
        ScoreSeries::new(v.to_vec()).unwrap()
    }

    fn labels(v: &[u8]) -> LabelSeries {
        LabelSeries::new(v.to_vec()).unwrap()
    }

    fn brute_auc(s: &[f64], y: &[u8]) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if y[i] == 1 && y[j] == 0 {
                    pairs += 1.0;
                    total += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        total / pairs
    }

    #[test]
    fn f1_examples() {
        let y = labels(&[0, 1, 1, 0]);
        assert_eq!(f1(&scores(&[0.0, 1.0, 1.0, 0.0]), &y, 0.5).unwrap().value, 1.0);
        assert_eq!(f1(&scores(&[0.0; 4]), &y, 0.5).unwrap().value, 0.0);
        let v = f1(&scores(&[0.9, 0.1, 0.9, 0.1]), &labels(&[1, 0, 0, 1]), 0.5).unwrap();
        assert_eq!(v.value, 0.5);
        assert_eq!(v.params["precision"], "0.5");
        assert_eq!(v.params["recall"], "0.5");
    }

    #[test]
    fn f1_pa_examples() {
        let mut y = vec![0u8; 20];
        y[5..15].fill(1);
        let mut s = vec![0.0; 20];
        s[9] = 1.0;
        let v = f1_pa(&scores(&s), &labels(&y), 0.5).unwrap();
        assert_eq!(v.value, 1.0);
        assert_eq!(f1_pa(&scores(&[0.0; 20]), &labels(&y), 0.5).unwrap().value, 0.0);

        let y = labels(&[1, 1, 0, 1, 1]);
        let s = scores(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        let pred = BinaryPrediction::from_scores(&s, 0.5).point_adjusted(&y);
        assert_eq!(pred.values(), &[true, true, false, false, false]);
        let v = f1_pa(&s, &y, 0.5).unwrap();
        assert!((v.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_f1_examples() {
        let y = labels(&[0, 1, 1, 0, 0, 1, 1, 1, 0]);
        let both = scores(&[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(reduced_f1(&both, &y, 0.5).unwrap().value, 1.0);
        let one = scores(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v = reduced_f1(&one, &y, 0.5).unwrap();
        assert!((v.value - 2.0 / 3.0).abs() < 1e-12);

        let y = labels(&[0, 1, 1, 0, 0]);
        let s = scores(&[1.0, 1.0, 0.0, 1.0, 0.0]);
        let v = reduced_f1(&s, &y, 0.5).unwrap();
        assert_eq!(v.params["precision"], (1.0f64 / 3.0).to_string());
        assert!((v.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn auc_examples() {
        let v = auc_roc(&scores(&[0.1, 0.2, 0.8, 0.9]), &labels(&[0, 0, 1, 1])).unwrap();
        assert_eq!(v.value, 1.0);
        let v = auc_roc(&scores(&[0.1, 0.4, 0.35, 0.8]), &labels(&[0, 0, 1, 1])).unwrap();
        assert_eq!(v.value, 0.75);
        assert!(matches!(auc_roc(&scores(&[0.1, 0.2]), &labels(&[1, 1])), Err(Error::Undefined(_))));
    }

    #[test]
    fn auc_of_uninformative_scores_is_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let s: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.random_bool(0.1) as u8).collect();
        let v = auc_roc(&scores(&s), &labels(&y)).unwrap();
        assert!((v.value - 0.5).abs() < 0.02, "{}", v.value);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let s = scores(&[0.1, 0.2]);
        let y = labels(&[0, 1, 0]);
        assert!(f1(&s, &y, 0.5).is_err());
        assert!(f1_pa(&s, &y, 0.5).is_err());
        assert!(reduced_f1(&s, &y, 0.5).is_err());
        assert!(auc_roc(&s, &y).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (2usize..120).prop_flat_map(|n| {
            (
                // Coarse grid so ties happen.
                prop::collection::vec((0u8..=10).prop_map(|v| v as f64 / 10.0), n),
                prop::collection::vec(0u8..=1, n),
            )
        })
    }

    proptest! {
        #[test]
        fn auc_matches_pair_enumeration((s, y) in instance()) {
            let l = labels(&y);
            match auc_roc(&scores(&s), &l) {
                Ok(v) => prop_assert!((v.value - brute_auc(&s, &y)).abs() < 1e-12),
                Err(_) => prop_assert!(l.anomaly_count() == 0 || l.anomaly_count() == y.len()),
            }
        }

        #[test]
        fn auc_invariant_under_increasing_transform((s, y) in instance()) {
            let transformed: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            let a = auc_roc(&scores(&s), &labels(&y));
            let b = auc_roc(&scores(&transformed), &labels(&y));
            prop_assert_eq!(a.map(|v| v.value), b.map(|v| v.value));
        }

        #[test]
        fn point_adjustment_never_hurts((s, y) in instance(), theta in 0.05f64..0.95) {
            let (s, y) = (scores(&s), labels(&y));
            let plain = f1(&s, &y, theta).unwrap().value;
            let adjusted = f1_pa(&s, &y, theta).unwrap().value;
            prop_assert!(adjusted + 1e-12 >= plain);
            prop_assert!((0.0..=1.0).contains(&adjusted));
        }

        #[test]
        fn reduced_equals_pa_for_point_anomalies(
            s in prop::collection::vec(0.0f64..=1.0, 2..100),
            mask in prop::collection::vec(0u8..=1, 2..100),
            theta in 0.05f64..0.95,
        ) {
            let n = s.len().min(mask.len());
            // Keep only isolated anomalies: no two adjacent ones.
            let mut y = vec![0u8; n];
            for i in 0..n {
                if mask[i] == 1 && (i == 0 || y[i - 1] == 0) {
                    y[i] = 1;
                }
            }
            let (s, y) = (scores(&s[..n]), labels(&y));
            let a = reduced_f1(&s, &y, theta).unwrap().value;
            let b = f1_pa(&s, &y, theta).unwrap().value;
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
