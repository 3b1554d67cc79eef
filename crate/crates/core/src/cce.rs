//! Confidence-consistency evaluation.
//!
//! Every event (maximal label run) is scored as `confidence × consistency`:
//! confidence is how far the event's mean score sits on the correct side of
//! the threshold, consistency is `exp(-U)` with `U` the variance of the Beta
//! distribution fitted to the event's scores. Event scores are averaged per
//! class and mixed with weight `α`; the same product computed over the pooled
//! anomaly and pooled normal time steps is mixed with weight `η`. The final
//! score is the sum of the two.

use serde::{Deserialize, Serialize};

use crate::beta::{fit_beta, moments, BetaFit, MomentStats};
use crate::error::{invalid, Result};
use crate::series::{extract_events, normalize, Event, EventKind, EventPartition, LabelSeries, ScoreSeries};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Confidence clamped at zero; the final score lies in `[0, 1]` for `τ ≥ 0.5`.
    Strict,
    /// Signed confidence; confidently wrong predictions push the score below zero.
    #[default]
    Relaxed,
}

impl std::str::FromStr for Mode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(Mode::Strict),
            "relaxed" => Ok(Mode::Relaxed),
            other => Err(invalid(format!("unknown mode {other:?}, expected strict or relaxed"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Strict => "strict",
            Mode::Relaxed => "relaxed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CceConfig {
    /// Confidence threshold τ, in `(0, 1)`.
    pub tau: f64,
    /// Weight α of the anomaly-event average in the event-level score.
    pub anomaly_event_weight: f64,
    /// Weight η of the pooled anomaly score in the global score.
    pub global_anomaly_weight: f64,
    pub mode: Mode,
    /// Min-max normalize scores before scoring. Only turned off to study the
    /// metric on scores that are already in `[0, 1]`.
    pub normalize: bool,
}

impl Default for CceConfig {
    fn default() -> Self {
        Self { tau: 0.5, anomaly_event_weight: 0.5, global_anomaly_weight: 0.5, mode: Mode::Relaxed, normalize: true }
    }
}

impl CceConfig {
    pub fn strict() -> Self {
        Self { mode: Mode::Strict, ..Self::default() }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(invalid(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        for (name, w) in
            [("anomaly_event_weight", self.anomaly_event_weight), ("global_anomaly_weight", self.global_anomaly_weight)]
        {
            if !(0.0..=1.0).contains(&w) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {w}")));
            }
        }
        Ok(())
    }
}

/// Score of a single event or pooled class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentScore {
    pub kind: EventKind,
    pub count: usize,
    pub mean: f64,
    pub uncertainty: f64,
    /// Whether the Beta fit succeeded (false means the variance fallback was used).
    pub fitted: bool,
    pub confidence: f64,
    pub consistency: f64,
    pub score: f64,
}

impl SegmentScore {
    fn new(kind: EventKind, stats: &MomentStats, config: &CceConfig) -> Self {
        let fit: BetaFit = fit_beta(stats);
        let confidence = confidence_from_mean(kind, stats.mean, config.tau, config.mode);
        let consistency = (-fit.uncertainty).exp();
        Self {
            kind,
            count: stats.count,
            mean: stats.mean,
            uncertainty: fit.uncertainty,
            fitted: fit.is_fitted(),
            confidence,
            consistency,
            score: confidence * consistency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventScore {
    pub event: Event,
    #[serde(flatten)]
    pub detail: SegmentScore,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventLevelScore {
    pub score: f64,
    /// Mean event score over anomaly events, `None` when there are none.
    pub anomaly_mean: Option<f64>,
    pub normal_mean: Option<f64>,
    pub events: Vec<EventScore>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalScore {
    pub score: f64,
    pub anomaly: Option<SegmentScore>,
    pub normal: Option<SegmentScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CceBreakdown {
    pub per_event: Vec<EventScore>,
    pub s_event: f64,
    pub s_anom_global: f64,
    pub s_norm_global: f64,
    pub s_global: f64,
    pub s_cce: f64,
    /// Segments (events and pools) whose Beta fit fell back to the clamped variance.
    pub fallback_events: usize,
    /// Set when the labels contain a single class; the absent class's weight
    /// was moved onto the present one.
    pub missing_class: Option<EventKind>,
    pub config: CceConfig,
}

fn confidence_from_mean(kind: EventKind, mean: f64, tau: f64, mode: Mode) -> f64 {
    let signed = match kind {
        EventKind::Anomaly => mean - tau,
        EventKind::Normal => 1.0 - tau - mean,
    };
    match mode {
        Mode::Strict => signed.max(0.0),
        Mode::Relaxed => signed,
    }
}

fn expect_kind(event: &Event, kind: EventKind) -> Result<()> {
    if event.kind != kind {
        return Err(invalid(format!(
            "expected a {kind:?} event, got {:?} at [{}, {})",
            event.kind, event.start, event.end
        )));
    }
    Ok(())
}

pub fn anomaly_confidence(scores: &ScoreSeries, event: &Event, tau: f64, mode: Mode) -> Result<f64> {
    expect_kind(event, EventKind::Anomaly)?;
    let m = moments(event.slice(scores.values())?)?;
    Ok(confidence_from_mean(EventKind::Anomaly, m.mean, tau, mode))
}

pub fn normal_confidence(scores: &ScoreSeries, event: &Event, tau: f64, mode: Mode) -> Result<f64> {
    expect_kind(event, EventKind::Normal)?;
    let m = moments(event.slice(scores.values())?)?;
    Ok(confidence_from_mean(EventKind::Normal, m.mean, tau, mode))
}

/// `exp(-U)` for the event's Beta uncertainty; always in `[e^-0.25, 1]`.
pub fn consistency(scores: &ScoreSeries, event: &Event) -> Result<f64> {
    let m = moments(event.slice(scores.values())?)?;
    Ok((-fit_beta(&m).uncertainty).exp())
}

/// Weighted mix of the two class terms; an absent class hands its weight over.
fn mix(weight: f64, anomaly: Option<f64>, normal: Option<f64>) -> f64 {
    match (anomaly, normal) {
        (Some(a), Some(n)) => weight * a + (1.0 - weight) * n,
        (Some(a), None) => a,
        (None, Some(n)) => n,
        (None, None) => 0.0,
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn check_partition(scores: &ScoreSeries, partition: &EventPartition) -> Result<()> {
    if partition.event_count() == 0 {
        return Err(invalid("event partition is empty"));
    }
    if partition.len() != scores.len() {
        return Err(invalid(format!(
            "partition covers {} steps but there are {} scores",
            partition.len(),
            scores.len()
        )));
    }
    Ok(())
}

/// Per-event moments, in time order.
fn event_stats(scores: &ScoreSeries, partition: &EventPartition) -> Result<Vec<(Event, MomentStats)>> {
    partition.iter().map(|e| Ok((*e, moments(e.slice(scores.values())?)?))).collect()
}

fn event_level_from_stats(stats: &[(Event, MomentStats)], config: &CceConfig) -> EventLevelScore {
    let events: Vec<EventScore> = stats
        .iter()
        .map(|(event, m)| EventScore { event: *event, detail: SegmentScore::new(event.kind, m, config) })
        .collect();
    let class_mean = |kind| mean_of(events.iter().filter(|e| e.event.kind == kind).map(|e| e.detail.score));
    let anomaly_mean = class_mean(EventKind::Anomaly);
    let normal_mean = class_mean(EventKind::Normal);
    EventLevelScore {
        score: mix(config.anomaly_event_weight, anomaly_mean, normal_mean),
        anomaly_mean,
        normal_mean,
        events,
    }
}

fn global_from_stats(stats: &[(Event, MomentStats)], config: &CceConfig) -> GlobalScore {
    let pool = |kind| {
        stats
            .iter()
            .filter(|(e, _)| e.kind == kind)
            .map(|(_, m)| *m)
            .reduce(|a, b| a.merge(&b))
            .map(|m| SegmentScore::new(kind, &m, config))
    };
    let anomaly = pool(EventKind::Anomaly);
    let normal = pool(EventKind::Normal);
    GlobalScore {
        score: mix(config.global_anomaly_weight, anomaly.map(|s| s.score), normal.map(|s| s.score)),
        anomaly,
        normal,
    }
}

/// Event-level score on already-normalized scores.
pub fn event_level_score(
    scores: &ScoreSeries,
    partition: &EventPartition,
    config: &CceConfig,
) -> Result<EventLevelScore> {
    config.validate()?;
    check_partition(scores, partition)?;
    Ok(event_level_from_stats(&event_stats(scores, partition)?, config))
}

/// Global score on already-normalized scores: all anomaly steps form one pool,
/// all normal steps another.
pub fn global_score(scores: &ScoreSeries, partition: &EventPartition, config: &CceConfig) -> Result<GlobalScore> {
    config.validate()?;
    check_partition(scores, partition)?;
    Ok(global_from_stats(&event_stats(scores, partition)?, config))
}

/// Full CCE pipeline: normalize, segment, score events and pools, sum.
pub fn cce(scores: &ScoreSeries, labels: &LabelSeries, config: &CceConfig) -> Result<CceBreakdown> {
    config.validate()?;
    if scores.len() != labels.len() {
        return Err(invalid(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    let normalized;
    let scores = if config.normalize {
        normalized = normalize(scores);
        &normalized
    } else {
        scores
    };
    let partition = extract_events(labels);
    let stats = event_stats(scores, &partition)?;
    let event_level = event_level_from_stats(&stats, config);
    let global = global_from_stats(&stats, config);

    let fallback_events = event_level.events.iter().filter(|e| !e.detail.fitted).count()
        + [global.anomaly, global.normal].iter().flatten().filter(|s| !s.fitted).count();
    let missing_class = match (global.anomaly, global.normal) {
        (None, _) => Some(EventKind::Anomaly),
        (_, None) => Some(EventKind::Normal),
        _ => None,
    };
    Ok(CceBreakdown {
        s_event: event_level.score,
        s_anom_global: global.anomaly.map_or(0.0, |s| s.score),
        s_norm_global: global.normal.map_or(0.0, |s| s.score),
        s_global: global.score,
        s_cce: event_level.score + global.score,
        per_event: event_level.events,
        fallback_events,
        missing_class,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> ScoreSeries {
        ScoreSeries::new(v.to_vec()).unwrap()
    }

    fn labels(v: &[u8]) -> LabelSeries {
        LabelSeries::new(v.to_vec()).unwrap()
    }

    const PERFECT_LABELS: [u8; 10] = [0, 0, 1, 1, 1, 0, 0, 0, 1, 0];

    fn perfect_scores() -> Vec<f64> {
        PERFECT_LABELS.iter().map(|&l| l as f64).collect()
    }

    #[test]
    fn confidence_examples() {
        let a = Event::new(0, 2, EventKind::Anomaly).unwrap();
        let n = Event::new(0, 2, EventKind::Normal).unwrap();
        let s = scores(&[1.0, 1.0]);
        assert_eq!(anomaly_confidence(&s, &a, 0.5, Mode::Strict).unwrap(), 0.5);
        let s = scores(&[0.3, 0.3]);
        assert_eq!(anomaly_confidence(&s, &a, 0.5, Mode::Strict).unwrap(), 0.0);
        assert!((anomaly_confidence(&s, &a, 0.5, Mode::Relaxed).unwrap() + 0.2).abs() < 1e-12);
        let s = scores(&[0.5, 0.5]);
        for mode in [Mode::Strict, Mode::Relaxed] {
            assert_eq!(anomaly_confidence(&s, &a, 0.5, mode).unwrap(), 0.0);
            assert_eq!(normal_confidence(&s, &n, 0.5, mode).unwrap(), 0.0);
        }
        let s = scores(&[0.0, 0.0]);
        assert_eq!(normal_confidence(&s, &n, 0.5, Mode::Strict).unwrap(), 0.5);
        let s = scores(&[0.8, 0.8]);
        assert!((normal_confidence(&s, &n, 0.5, Mode::Relaxed).unwrap() + 0.3).abs() < 1e-12);
        assert_eq!(normal_confidence(&s, &n, 0.5, Mode::Strict).unwrap(), 0.0);
    }

    #[test]
    fn confidence_rejects_wrong_kind() {
        let s = scores(&[0.1, 0.2]);
        let a = Event::new(0, 2, EventKind::Anomaly).unwrap();
        let n = Event::new(0, 2, EventKind::Normal).unwrap();
        assert!(normal_confidence(&s, &a, 0.5, Mode::Strict).is_err());
        assert!(anomaly_confidence(&s, &n, 0.5, Mode::Strict).is_err());
    }

    #[test]
    fn consistency_examples() {
        let e = |n| Event::new(0, n, EventKind::Anomaly).unwrap();
        assert_eq!(consistency(&scores(&[0.7, 0.7, 0.7]), &e(3)).unwrap(), 1.0);
        let c = consistency(&scores(&[0.2, 0.4, 0.6, 0.8]), &e(4)).unwrap();
        assert!((c - 0.951_229_424_500_714).abs() < 1e-12, "{c}");
        let c = consistency(&scores(&[0.0, 1.0]), &e(2)).unwrap();
        assert!((c - 0.778_800_783_071_404_9).abs() < 1e-12, "{c}");
    }

    #[test]
    fn event_level_examples() {
        let cfg = CceConfig::default();
        let l = labels(&PERFECT_LABELS);
        let p = extract_events(&l);
        let ev = event_level_score(&scores(&perfect_scores()), &p, &cfg).unwrap();
        assert_eq!(ev.score, 0.5);

        let ev = event_level_score(&scores(&[0.5; 10]), &p, &cfg).unwrap();
        assert_eq!(ev.score, 0.0);

        let p = extract_events(&labels(&[0; 6]));
        let ev = event_level_score(&scores(&[0.0; 6]), &p, &cfg).unwrap();
        assert_eq!(ev.score, 0.5);
        assert_eq!(ev.anomaly_mean, None);
    }

    #[test]
    fn event_level_rejects_mismatched_partition() {
        let p = extract_events(&labels(&[0, 1, 1]));
        let err = event_level_score(&scores(&[0.1, 0.2]), &p, &CceConfig::default());
        assert!(err.is_err());
    }

    #[test]
    fn global_examples() {
        let cfg = CceConfig::default();
        let p = extract_events(&labels(&PERFECT_LABELS));
        let g = global_score(&scores(&perfect_scores()), &p, &cfg).unwrap();
        assert_eq!(g.score, 0.5);
        let g = global_score(&scores(&[0.5; 10]), &p, &cfg).unwrap();
        assert_eq!(g.score, 0.0);

        // Anomaly pool [0.2, 0.4, 0.6, 0.8] split over two events, normal pool absent weight.
        let l = labels(&[1, 1, 0, 1, 1]);
        let s = scores(&[0.2, 0.4, 0.0, 0.6, 0.8]);
        let p = extract_events(&l);
        for mode in [Mode::Strict, Mode::Relaxed] {
            let cfg = CceConfig { global_anomaly_weight: 1.0, mode, ..CceConfig::default() };
            let g = global_score(&s, &p, &cfg).unwrap();
            let pool = g.anomaly.unwrap();
            assert!((pool.consistency - 0.951_229_424_500_714).abs() < 1e-12);
            assert!(g.score.abs() < 1e-12, "{mode:?}: {}", g.score);
        }
    }

    #[test]
    fn cce_examples() {
        let l = labels(&PERFECT_LABELS);
        let perfect = scores(&perfect_scores());
        for cfg in [CceConfig::default(), CceConfig::strict()] {
            let b = cce(&perfect, &l, &cfg).unwrap();
            assert_eq!(b.s_cce, 1.0);
            assert_eq!(b.missing_class, None);
            assert_eq!(cce(&scores(&[0.5; 10]), &l, &cfg).unwrap().s_cce, 0.0);
            // Constant input of any level normalizes to 0.5.
            assert_eq!(cce(&scores(&[3.0; 10]), &l, &cfg).unwrap().s_cce, 0.0);
        }
        let inverted: Vec<f64> = perfect_scores().iter().map(|s| 1.0 - s).collect();
        let b = cce(&scores(&inverted), &l, &CceConfig::default()).unwrap();
        assert_eq!(b.s_cce, -1.0);
        assert_eq!(cce(&scores(&inverted), &l, &CceConfig::strict()).unwrap().s_cce, 0.0);
    }

    #[test]
    fn cce_errors() {
        let cfg = CceConfig::default();
        assert!(cce(&scores(&[0.1, 0.2]), &labels(&[0, 1, 0]), &cfg).is_err());
        let bad = CceConfig { tau: 1.0, ..cfg };
        assert!(cce(&scores(&[0.1, 0.2]), &labels(&[0, 1]), &bad).is_err());
        let bad = CceConfig { anomaly_event_weight: 1.5, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_class_is_flagged() {
        let b = cce(&scores(&[0.0, 0.2, 0.1]), &labels(&[0, 0, 0]), &CceConfig::default()).unwrap();
        assert_eq!(b.missing_class, Some(EventKind::Anomaly));
        assert_eq!(b.s_anom_global, 0.0);
        let b = cce(&scores(&[0.9, 1.0]), &labels(&[1, 1]), &CceConfig::default()).unwrap();
        assert_eq!(b.missing_class, Some(EventKind::Normal));
    }

    #[test]
    fn fallback_segments_are_counted() {
        // Both events (and so both pools) are {0, 1}: m2 = mean(1 - mean) = 0.25.
        let b = cce(&scores(&[0.0, 1.0, 1.0, 0.0]), &labels(&[1, 1, 0, 0]), &CceConfig::default()).unwrap();
        assert_eq!(b.fallback_events, 4);
        for e in &b.per_event {
            assert_eq!(e.detail.uncertainty, 0.25);
        }
    }

    #[test]
    fn mode_parses() {
        assert_eq!("Strict".parse::<Mode>().unwrap(), Mode::Strict);
        assert_eq!("relaxed".parse::<Mode>().unwrap(), Mode::Relaxed);
        assert!("lenient".parse::<Mode>().is_err());
    }
}
