//! Uniform `(scores, labels) -> MetricValue` interface over all metrics, so
//! the benchmark harness can iterate them generically.

use std::sync::Arc;

use crate::baseline::{auc_roc, f1, f1_pa, reduced_f1, MetricValue, DEFAULT_THRESHOLD};
use crate::cce::{cce, CceConfig};
use crate::error::{invalid, Result};
use crate::series::{normalize, LabelSeries, ScoreSeries};

pub trait Metric: Send + Sync {
    fn name(&self) -> &str;

    /// Ranking direction. Metrics where lower is better are negated by the
    /// harness before ranking.
    fn higher_is_better(&self) -> bool {
        true
    }

    fn evaluate(&self, scores: &ScoreSeries, labels: &LabelSeries) -> Result<MetricValue>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CceMetric {
    pub config: CceConfig,
}

impl Metric for CceMetric {
    fn name(&self) -> &str {
        "cce"
    }

    fn evaluate(&self, scores: &ScoreSeries, labels: &LabelSeries) -> Result<MetricValue> {
        let b = cce(scores, labels, &self.config)?;
        Ok(MetricValue::new("cce", b.s_cce)
            .with_param("tau", self.config.tau)
            .with_param("alpha", self.config.anomaly_event_weight)
            .with_param("eta", self.config.global_anomaly_weight)
            .with_param("mode", self.config.mode)
            .with_param("s_event", b.s_event)
            .with_param("s_global", b.s_global))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdedKind {
    F1,
    F1Pa,
    ReducedF1,
}

/// A thresholded baseline applied to min-max normalized scores.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdedMetric {
    pub kind: ThresholdedKind,
    pub threshold: f64,
}

impl ThresholdedMetric {
    pub fn new(kind: ThresholdedKind, threshold: f64) -> Self {
        Self { kind, threshold }
    }
}

impl Metric for ThresholdedMetric {
    fn name(&self) -> &str {
        match self.kind {
            ThresholdedKind::F1 => "f1",
            ThresholdedKind::F1Pa => "f1_pa",
            ThresholdedKind::ReducedF1 => "reduced_f1",
        }
    }

    fn evaluate(&self, scores: &ScoreSeries, labels: &LabelSeries) -> Result<MetricValue> {
        let s = normalize(scores);
        match self.kind {
            ThresholdedKind::F1 => f1(&s, labels, self.threshold),
            ThresholdedKind::F1Pa => f1_pa(&s, labels, self.threshold),
            ThresholdedKind::ReducedF1 => reduced_f1(&s, labels, self.threshold),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AucRocMetric;

impl Metric for AucRocMetric {
    fn name(&self) -> &str {
        "auc_roc"
    }

    fn evaluate(&self, scores: &ScoreSeries, labels: &LabelSeries) -> Result<MetricValue> {
        auc_roc(scores, labels)
    }
}

/// Adapter for user-supplied metrics.
pub struct FnMetric<F> {
    name: String,
    higher_is_better: bool,
    f: F,
}

impl<F> FnMetric<F>
where
    F: Fn(&ScoreSeries, &LabelSeries) -> Result<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, higher_is_better: bool, f: F) -> Self {
        Self { name: name.into(), higher_is_better, f }
    }
}

impl<F> Metric for FnMetric<F>
where
    F: Fn(&ScoreSeries, &LabelSeries) -> Result<f64> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn higher_is_better(&self) -> bool {
        self.higher_is_better
    }

    fn evaluate(&self, scores: &ScoreSeries, labels: &LabelSeries) -> Result<MetricValue> {
        Ok(MetricValue::new(self.name.clone(), (self.f)(scores, labels)?))
    }
}

/// Ordered, name-unique collection of metrics.
#[derive(Clone, Default)]
pub struct MetricRegistry {
    metrics: Vec<Arc<dyn Metric>>,
}

impl std::fmt::Debug for MetricRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl MetricRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// CCE plus every built-in baseline.
    pub fn with_builtins(cce_config: CceConfig, threshold: f64) -> Self {
        let mut r = Self::new();
        r.register(CceMetric { config: cce_config }).unwrap();
        r.register(AucRocMetric).unwrap();
        for kind in [ThresholdedKind::F1, ThresholdedKind::F1Pa, ThresholdedKind::ReducedF1] {
            r.register(ThresholdedMetric::new(kind, threshold)).unwrap();
        }
        r
    }

    pub fn register(&mut self, metric: impl Metric + 'static) -> Result<()> {
        self.register_arc(Arc::new(metric))
    }

    pub fn register_arc(&mut self, metric: Arc<dyn Metric>) -> Result<()> {
        if self.get(metric.name()).is_some() {
            return Err(invalid(format!("metric {:?} is already registered", metric.name())));
        }
        self.metrics.push(metric);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn Metric>> {
        self.metrics.iter().find(|m| m.name() == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.metrics.iter().map(|m| m.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Metric>> {
        self.metrics.iter()
    }

    pub fn len(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }

    /// Sub-registry with the named metrics, in the requested order.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<MetricRegistry> {
        let mut out = MetricRegistry::new();
        for name in names {
            let name = name.as_ref();
            let metric = self.get(name).ok_or_else(|| {
                invalid(format!("unknown metric {name:?}; registered metrics: {}", self.names().join(", ")))
            })?;
            out.register_arc(Arc::clone(metric))?;
        }
        Ok(out)
    }
}

impl Default for ThresholdedMetric {
    fn default() -> Self {
        Self::new(ThresholdedKind::F1, DEFAULT_THRESHOLD)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_registered_in_order() {
        let r = MetricRegistry::with_builtins(CceConfig::default(), DEFAULT_THRESHOLD);
        assert_eq!(r.names(), vec!["cce", "auc_roc", "f1", "f1_pa", "reduced_f1"]);
    }

    #[test]
    fn select_reports_unknown_names() {
        let r = MetricRegistry::with_builtins(CceConfig::default(), DEFAULT_THRESHOLD);
        let sub = r.select(&["f1", "cce"]).unwrap();
        assert_eq!(sub.names(), vec!["f1", "cce"]);
        let err = r.select(&["vus_roc"]).unwrap_err().to_string();
        assert!(err.contains("vus_roc") && err.contains("reduced_f1"), "{err}");
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut r = MetricRegistry::new();
        r.register(AucRocMetric).unwrap();
        assert!(r.register(AucRocMetric).is_err());
    }

    #[test]
    fn external_metrics_plug_in() {
        let mut r = MetricRegistry::new();
        r.register(FnMetric::new("mean_anomaly_score", true, |s: &ScoreSeries, y: &LabelSeries| {
            let hits: Vec<f64> = s.values().iter().zip(y.values()).filter(|(_, &l)| l == 1).map(|(&v, _)| v).collect();
            Ok(hits.iter().sum::<f64>() / hits.len().max(1) as f64)
        }))
        .unwrap();
        let s = ScoreSeries::new(vec![0.0, 0.4, 0.8]).unwrap();
        let y = LabelSeries::new(vec![0, 1, 1]).unwrap();
        let v = r.get("mean_anomaly_score").unwrap().evaluate(&s, &y).unwrap();
        assert!((v.value - 0.6).abs() < 1e-12);
    }

    #[test]
    fn thresholded_metrics_normalize_first() {
        // Raw scores far outside [0, 1]; after normalization they separate perfectly.
        let s = ScoreSeries::new(vec![10.0, 10.5, 30.0, 29.0]).unwrap();
        let y = LabelSeries::new(vec![0, 0, 1, 1]).unwrap();
        let m = ThresholdedMetric::new(ThresholdedKind::F1, 0.5);
        assert_eq!(m.evaluate(&s, &y).unwrap().value, 1.0);
    }
}
