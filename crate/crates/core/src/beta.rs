//! Method-of-moments Beta fitting and the per-event uncertainty `U`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::series::{Event, ScoreSeries};

/// Largest variance of any distribution supported on `[0, 1]`.
pub const MAX_UNCERTAINTY: f64 = 0.25;

/// Mean and population second central moment of a score segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentStats {
    pub mean: f64,
    pub m2: f64,
    pub count: usize,
}

impl MomentStats {
    /// Combines the moments of two disjoint segments (Chan et al. pairwise update).
    pub fn merge(&self, other: &MomentStats) -> MomentStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * nb / n;
        let sum_sq = self.m2 * na + other.m2 * nb + delta * delta * na * nb / n;
        MomentStats { mean, m2: (sum_sq / n).max(0.0), count: self.count + other.count }
    }
}

/// Two-pass mean and `1/n` variance.
pub fn moments(segment: &[f64]) -> Result<MomentStats> {
    if segment.is_empty() {
        return Err(invalid("cannot take moments of an empty segment"));
    }
    let n = segment.len() as f64;
    let mean = segment.iter().sum::<f64>() / n;
    let m2 = segment.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    Ok(MomentStats { mean, m2, count: segment.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaShape {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaShape {
    /// Analytic variance `αβ / ((α+β)²(α+β+1))`.
    pub fn variance(&self) -> f64 {
        let total = self.alpha + self.beta;
        self.alpha * self.beta / (total * total * (total + 1.0))
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Result of fitting a Beta distribution to one segment.
///
/// `shape` is `None` when the moment condition `0 < m2 < mean(1 - mean)` fails;
/// the uncertainty then falls back to the clamped sample variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaFit {
    pub shape: Option<BetaShape>,
    pub uncertainty: f64,
}

impl BetaFit {
    pub fn is_fitted(&self) -> bool {
        self.shape.is_some()
    }
}

pub fn fit_beta(stats: &MomentStats) -> BetaFit {
    let MomentStats { mean, m2, .. } = *stats;
    let spread = mean * (1.0 - mean);
    if m2 > 0.0 && m2 < spread {
        let common = spread / m2 - 1.0;
        let shape = BetaShape { alpha: mean * common, beta: (1.0 - mean) * common };
        if shape.alpha > 0.0 && shape.beta > 0.0 {
            return BetaFit { shape: Some(shape), uncertainty: shape.variance().min(MAX_UNCERTAINTY) };
        }
    }
    BetaFit { shape: None, uncertainty: m2.clamp(0.0, MAX_UNCERTAINTY) }
}

/// Uncertainty of the Beta fit over `event`'s slice of `scores`.
pub fn event_uncertainty(scores: &ScoreSeries, event: &Event) -> Result<f64> {
    let segment = event.slice(scores.values())?;
    Ok(fit_beta(&moments(segment)?).uncertainty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::EventKind;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn moments_examples() {
        let m = moments(&[0.2, 0.4, 0.6, 0.8]).unwrap();
        assert!(close(m.mean, 0.5) && close(m.m2, 0.05), "{m:?}");
        let m = moments(&[1.0]).unwrap();
        assert_eq!((m.mean, m.m2), (1.0, 0.0));
        let m = moments(&[0.0, 1.0]).unwrap();
        assert_eq!((m.mean, m.m2), (0.5, 0.25));
        assert!(moments(&[]).is_err());
    }

    #[test]
    fn fit_examples() {
        let fit = fit_beta(&MomentStats { mean: 0.5, m2: 0.05, count: 4 });
        let shape = fit.shape.unwrap();
        assert!(close(shape.alpha, 2.0) && close(shape.beta, 2.0));
        assert!(close(fit.uncertainty, 0.05));

        let fit = fit_beta(&MomentStats { mean: 0.7, m2: 0.0, count: 3 });
        assert!(fit.shape.is_none());
        assert_eq!(fit.uncertainty, 0.0);

        let fit = fit_beta(&MomentStats { mean: 0.5, m2: 0.25, count: 2 });
        assert!(fit.shape.is_none());
        assert_eq!(fit.uncertainty, 0.25);
    }

    #[test]
    fn fallback_clamps_out_of_range_variance() {
        // Only reachable with un-normalized scores.
        let m = moments(&[-1.0, 2.0]).unwrap();
        let fit = fit_beta(&m);
        assert!(fit.shape.is_none());
        assert_eq!(fit.uncertainty, MAX_UNCERTAINTY);
    }

    #[test]
    fn event_uncertainty_examples() {
        let s = ScoreSeries::new(vec![0.2, 0.4, 0.6, 0.8]).unwrap();
        let whole = Event::new(0, 4, EventKind::Anomaly).unwrap();
        assert!(close(event_uncertainty(&s, &whole).unwrap(), 0.05));
        let single = Event::new(2, 3, EventKind::Anomaly).unwrap();
        assert_eq!(event_uncertainty(&s, &single).unwrap(), 0.0);
        let flat = ScoreSeries::new(vec![0.9; 5]).unwrap();
        let e = Event::new(0, 5, EventKind::Normal).unwrap();
        assert_eq!(event_uncertainty(&flat, &e).unwrap(), 0.0);
        let beyond = Event::new(3, 6, EventKind::Normal).unwrap();
        assert!(event_uncertainty(&s, &beyond).is_err());
    }

    proptest! {
        #[test]
        fn merge_matches_direct(
            a in prop::collection::vec(0.0f64..=1.0, 1..50),
            b in prop::collection::vec(0.0f64..=1.0, 1..50),
        ) {
            let merged = moments(&a).unwrap().merge(&moments(&b).unwrap());
            let joined: Vec<f64> = a.iter().chain(&b).copied().collect();
            let direct = moments(&joined).unwrap();
            prop_assert_eq!(merged.count, direct.count);
            prop_assert!((merged.mean - direct.mean).abs() < 1e-12);
            prop_assert!((merged.m2 - direct.m2).abs() < 1e-12);
        }

        #[test]
        fn fitted_shapes_are_positive_and_match_variance(
            seg in prop::collection::vec(0.0f64..=1.0, 1..100)
        ) {
            let m = moments(&seg).unwrap();
            prop_assert!(m.m2 <= MAX_UNCERTAINTY);
            let fit = fit_beta(&m);
            prop_assert!((0.0..=MAX_UNCERTAINTY).contains(&fit.uncertainty));
            if let Some(shape) = fit.shape {
                prop_assert!(shape.alpha > 0.0 && shape.beta > 0.0);
                prop_assert!((shape.variance() - m.m2).abs() <= 1e-12 * m.m2);
                prop_assert!((shape.mean() - m.mean).abs() <= 1e-12);
            }
        }
    }
}
