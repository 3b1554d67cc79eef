use anyhow::Result;
use cce_core::rankeval::{loglog_slope, measure_latency, LatencyRecord, MachineInfo, MIN_REPETITIONS};
use cce_core::{AsgmSpec, SynthDatasetSpec, TaskKind, VarianceClass};
use serde::{Deserialize, Serialize};

use crate::config::MetricSettings;
use crate::io::{fmt_value, input_error, CsvDoc, OutputSet};

pub const SCHEMA: &str = "cce-cli.bench/1";

/// Input of `cce bench`. Each sweep can be emptied to skip it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub schema: String,
    pub seed: u64,
    pub metrics: Vec<String>,
    pub repetitions: usize,
    pub seg_len_min: usize,
    pub seg_len_max: usize,
    /// Series lengths for the length sweep.
    pub lengths: Vec<usize>,
    /// Points per anomaly event in the length sweep; keeps density fixed.
    pub points_per_segment: usize,
    /// Event counts for the segment sweep.
    pub segment_counts: Vec<usize>,
    pub segment_sweep_length: usize,
    /// Tasks for the per-task sweep; each uses one representative model.
    pub tasks: Vec<TaskKind>,
    pub task_sweep_length: usize,
    pub task_sweep_segments: usize,
    pub settings: MetricSettings,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA.to_owned(),
            seed: 42,
            metrics: Vec::new(),
            repetitions: 11,
            seg_len_min: 40,
            seg_len_max: 60,
            lengths: vec![10_000, 100_000, 1_000_000],
            points_per_segment: 5_000,
            segment_counts: vec![10, 100, 1_000],
            segment_sweep_length: 100_000,
            tasks: TaskKind::ALL.to_vec(),
            task_sweep_length: 100_000,
            task_sweep_segments: 20,
            settings: MetricSettings::default(),
        }
    }
}

/// Model timed in the length and segment sweeps.
pub fn sweep_model() -> AsgmSpec {
    AsgmSpec::acc_q(0.8).with_sigma(0.05)
}

/// Representative model of a task for the per-task sweep.
pub fn task_model(task: TaskKind) -> AsgmSpec {
    match task {
        TaskKind::AccQ => AsgmSpec::acc_q(0.8),
        TaskKind::LowDisAccQ => AsgmSpec::low_dis_acc_q(0.8),
        TaskKind::PreQNegPQ => AsgmSpec::pre_q_neg_p(0.8, cce_core::rankeval::FIXED_P_FOR_Q_TASK),
        TaskKind::PreQNegPP => AsgmSpec::pre_q_neg_p(cce_core::rankeval::FIXED_Q_FOR_P_TASK, 0.1),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    /// `length`, `segments` or `task`.
    pub sweep: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskKind>,
    #[serde(flatten)]
    pub record: LatencyRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub metric: String,
    /// Least-squares slope of log time against log length.
    pub length_loglog_slope: Option<f64>,
    /// Slowest over fastest median in the segment sweep.
    pub segment_max_min_ratio: Option<f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'static str,
    command: &'static str,
    config: &'a BenchConfig,
    machine: &'a MachineInfo,
    fits: &'a [ScalingFit],
    records: &'a [BenchRecord],
}

pub struct BenchOutcome {
    pub config: BenchConfig,
    pub machine: MachineInfo,
    pub records: Vec<BenchRecord>,
    pub fits: Vec<ScalingFit>,
    pub files: OutputSet,
}

fn dataset(name: String, ts_length: usize, segments: usize, cfg: &BenchConfig, seed: u64) -> SynthDatasetSpec {
    SynthDatasetSpec {
        name,
        ts_length,
        segments,
        seg_len_min: cfg.seg_len_min,
        seg_len_max: cfg.seg_len_max,
        variance_class: VarianceClass::Low,
        seed,
    }
}

impl BenchConfig {
    fn length_suite(&self) -> Vec<SynthDatasetSpec> {
        self.lengths
            .iter()
            .map(|&n| dataset(format!("len-{n}"), n, n / self.points_per_segment.max(1), self, self.seed))
            .collect()
    }

    fn segment_suite(&self) -> Vec<SynthDatasetSpec> {
        self.segment_counts
            .iter()
            .map(|&k| dataset(format!("seg-{k}"), self.segment_sweep_length, k, self, self.seed))
            .collect()
    }

    fn task_dataset(&self) -> SynthDatasetSpec {
        dataset(
            format!("task-{}", self.task_sweep_length),
            self.task_sweep_length,
            self.task_sweep_segments,
            self,
            self.seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < MIN_REPETITIONS {
            return Err(input_error(format!(
                "repetitions must be at least {MIN_REPETITIONS}, got {}",
                self.repetitions
            )));
        }
        if self.points_per_segment == 0 {
            return Err(input_error("points_per_segment must be positive"));
        }
        self.settings.validate()?;
        let task_suite = if self.tasks.is_empty() { vec![] } else { vec![self.task_dataset()] };
        for d in self.length_suite().iter().chain(&self.segment_suite()).chain(&task_suite) {
            d.validate().map_err(|e| input_error(format!("bench dataset {}: {e}", d.name)))?;
        }
        Ok(())
    }
}

/// Times the selected metrics over the three sweeps, strictly sequentially.
pub fn run_bench(config: &BenchConfig) -> Result<BenchOutcome> {
    let mut config = config.clone();
    config.schema = SCHEMA.to_owned();
    config.validate()?;
    let registry = config.settings.registry();
    let registry = if config.metrics.is_empty() { registry } else { registry.select(&config.metrics)? };
    config.metrics = registry.names().iter().map(|s| s.to_string()).collect();

    let length_suite = config.length_suite();
    let segment_suite = config.segment_suite();
    let model = sweep_model().with_seed(config.seed);
    let mut records = Vec::new();
    let mut fits = Vec::new();
    for metric in registry.iter() {
        let by_length = measure_latency(metric.as_ref(), &length_suite, &model, config.repetitions)?;
        let by_segments = measure_latency(metric.as_ref(), &segment_suite, &model, config.repetitions)?;
        let xs: Vec<f64> = by_length.iter().map(|r| r.ts_length as f64).collect();
        let ys: Vec<f64> = by_length.iter().map(|r| r.median_ms).collect();
        let medians = by_segments.iter().map(|r| r.median_ms);
        let ratio = (by_segments.len() >= 2)
            .then(|| medians.clone().fold(f64::MIN, f64::max) / medians.fold(f64::MAX, f64::min));
        fits.push(ScalingFit {
            metric: metric.name().to_owned(),
            length_loglog_slope: loglog_slope(&xs, &ys).ok(),
            segment_max_min_ratio: ratio,
        });
        records.extend(by_length.into_iter().map(|record| BenchRecord { sweep: "length", task: None, record }));
        records.extend(by_segments.into_iter().map(|record| BenchRecord { sweep: "segments", task: None, record }));
        for &task in &config.tasks {
            let model = task_model(task).with_seed(config.seed);
            let timed = measure_latency(metric.as_ref(), &[config.task_dataset()], &model, config.repetitions)?;
            records.extend(timed.into_iter().map(|record| BenchRecord { sweep: "task", task: Some(task), record }));
        }
    }

    let machine = MachineInfo::current();
    let mut files = OutputSet::new();
    files.add("latency.csv", latency_csv(&config, &records)?);
    files.add(
        "plot_length.csv",
        plot_csv(&config, &records, "length", "ts_length", |r| r.record.ts_length.to_string())?,
    );
    files.add(
        "plot_segments.csv",
        plot_csv(&config, &records, "segments", "segment_count", |r| r.record.segment_count.to_string())?,
    );
    files.add(
        "plot_task.csv",
        plot_csv(&config, &records, "task", "task", |r| r.task.map(|t| t.to_string()).unwrap_or_default())?,
    );
    files.add_json(
        "summary.json",
        &Summary {
            schema: SCHEMA,
            command: "bench",
            config: &config,
            machine: &machine,
            fits: &fits,
            records: &records,
        },
    )?;
    Ok(BenchOutcome { config, machine, records, fits, files })
}

fn latency_csv(config: &BenchConfig, records: &[BenchRecord]) -> Result<Vec<u8>> {
    let mut doc = CsvDoc::new(
        "cce-cli.bench.latency/1",
        config,
        &[
            "sweep",
            "metric",
            "task",
            "dataset",
            "model",
            "ts_length",
            "segment_count",
            "repetitions",
            "median_ms",
            "mean_ms",
            "min_ms",
            "max_ms",
        ],
    )?;
    for r in records {
        let l = &r.record;
        doc.row([
            r.sweep.to_owned(),
            l.metric_name.clone(),
            r.task.map(|t| t.to_string()).unwrap_or_default(),
            l.dataset.clone(),
            l.model.clone(),
            l.ts_length.to_string(),
            l.segment_count.to_string(),
            l.repetitions.to_string(),
            fmt_value(Some(l.median_ms)),
            fmt_value(Some(l.mean_ms)),
            fmt_value(Some(l.min_ms)),
            fmt_value(Some(l.max_ms)),
        ])?;
    }
    doc.finish()
}

fn plot_csv(
    config: &BenchConfig,
    records: &[BenchRecord],
    sweep: &str,
    x_name: &str,
    x: impl Fn(&BenchRecord) -> String,
) -> Result<Vec<u8>> {
    let mut doc =
        CsvDoc::new(&format!("cce-cli.bench.plot_{sweep}/1"), config, &["metric", x_name, "median_ms", "mean_ms"])?;
    for r in records.iter().filter(|r| r.sweep == sweep) {
        doc.row([
            r.record.metric_name.clone(),
            x(r),
            fmt_value(Some(r.record.median_ms)),
            fmt_value(Some(r.record.mean_ms)),
        ])?;
    }
    doc.finish()
}
