use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;

use crate::asgm::{generate_labels, generate_scores, mix_seed, AsgmSpec, SynthDatasetSpec};
use crate::error::{invalid, Result};
use crate::registry::Metric;

pub const MIN_REPETITIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyRecord {
    pub metric_name: String,
    /// Dataset name.
    pub dataset: String,
    /// Score generator the timings were taken on.
    pub model: String,
    pub ts_length: usize,
    pub segment_count: usize,
    pub repetitions: usize,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl LatencyRecord {
    /// Headline wall time: the median over repetitions.
    pub fn wall_time_ms(&self) -> f64 {
        self.median_ms
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub hostname: String,
}

impl MachineInfo {
    pub fn current() -> Self {
        let hostname = std::env::var("HOSTNAME")
            .ok()
            .or_else(|| std::fs::read_to_string("/etc/hostname").ok())
            .map(|h| h.trim().to_owned())
            .filter(|h| !h.is_empty())
            .unwrap_or_else(|| "unknown".to_owned());
        Self {
            os: std::env::consts::OS.to_owned(),
            arch: std::env::consts::ARCH.to_owned(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            hostname,
        }
    }
}

/// Times `metric` on each dataset of `suite` with scores from `model`.
///
/// One untimed warm-up call precedes the timed repetitions. Runs on the
/// calling thread only.
pub fn measure_latency(
    metric: &dyn Metric,
    suite: &[SynthDatasetSpec],
    model: &AsgmSpec,
    repetitions: usize,
) -> Result<Vec<LatencyRecord>> {
    if repetitions < MIN_REPETITIONS {
        return Err(invalid(format!("latency needs at least {MIN_REPETITIONS} repetitions, got {repetitions}")));
    }
    let mut records = Vec::with_capacity(suite.len());
    for dataset in suite {
        let labels = generate_labels(dataset)?;
        let scores = generate_scores(&model.with_seed(mix_seed(&[model.seed, dataset.seed])), &labels)?;
        black_box(metric.evaluate(&scores, &labels)?);

        let mut samples: Vec<f64> = (0..repetitions)
            .map(|_| {
                let start = Instant::now();
                let v = metric.evaluate(black_box(&scores), black_box(&labels));
                let elapsed = start.elapsed();
                black_box(v).ok();
                // Clamp to one nanosecond so records stay strictly positive.
                (elapsed.as_secs_f64() * 1e3).max(1e-6)
            })
            .collect();
        samples.sort_by(f64::total_cmp);
        let mid = samples.len() / 2;
        let median_ms = if samples.len() % 2 == 1 { samples[mid] } else { (samples[mid - 1] + samples[mid]) / 2.0 };
        records.push(LatencyRecord {
            metric_name: metric.name().to_owned(),
            dataset: dataset.name.clone(),
            model: model.label(),
            ts_length: dataset.ts_length,
            segment_count: dataset.segments,
            repetitions,
            median_ms,
            mean_ms: samples.iter().sum::<f64>() / samples.len() as f64,
            min_ms: samples[0],
            max_ms: samples[samples.len() - 1],
        });
    }
    Ok(records)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("need at least two (x, y) pairs of equal count"));
    }
    if xs.iter().chain(ys).any(|&v| v.is_nan() || v <= 0.0) {
        return Err(invalid("log-log fit needs strictly positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("all x values are equal"));
    }
    Ok(sxy / sxx)
}
