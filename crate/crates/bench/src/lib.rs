//! Shared fixtures for the criterion benchmarks.

use cce_core::{generate_labels, generate_scores, AsgmSpec, LabelSeries, ScoreSeries, SynthDatasetSpec, VarianceClass};

/// Labels with `segments` events of 40 to 60 points and noisy AccQ scores.
pub fn fixture(ts_length: usize, segments: usize, seed: u64) -> (ScoreSeries, LabelSeries) {
    let spec = SynthDatasetSpec {
        name: format!("bench-{ts_length}-{segments}"),
        ts_length,
        segments,
        seg_len_min: 40,
        seg_len_max: 60,
        variance_class: VarianceClass::Low,
        seed,
    };
    let labels = generate_labels(&spec).expect("feasible bench dataset");
    let model = AsgmSpec::acc_q(0.8).with_sigma(0.05).with_seed(seed);
    let scores = generate_scores(&model, &labels).expect("valid bench model");
    (scores, labels)
}

/// One event per 5000 points, the density used by the length sweep.
pub fn fixed_density(ts_length: usize, seed: u64) -> (ScoreSeries, LabelSeries) {
    fixture(ts_length, ts_length / 5_000, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_shape() {
        let (scores, labels) = fixture(10_000, 7, 1);
        assert_eq!(scores.len(), 10_000);
        assert_eq!(cce_core::extract_events(&labels).anomalies().len(), 7);
        assert_eq!(fixed_density(100_000, 1).1.len(), 100_000);
    }
}
