use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asgm::{generate_labels, generate_scores, mix_seed, AsgmSpec, Family, SynthDatasetSpec};
use crate::error::{invalid, Result};
use crate::registry::MetricRegistry;

use super::ranking::{expected_ranking, kendall, mean_rank_deviation, ranks_from_values, spearman};

/// Accuracy / hit-probability grid, ten models.
pub const ACCURACY_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
/// False-positive-rate grid for the PreQNegP_P task.
pub const FALSE_POSITIVE_GRID: [f64; 4] = [0.01, 0.05, 0.1, 0.3];
pub const SIGMA_GRID: [f64; 3] = [0.0, 0.05, 0.1];
/// `p` held fixed while PreQNegP_Q ranks by `q`.
pub const FIXED_P_FOR_Q_TASK: f64 = 0.1;
/// `q` held fixed while PreQNegP_P ranks by `p`.
pub const FIXED_Q_FOR_P_TASK: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    AccQ,
    LowDisAccQ,
    #[serde(rename = "PreQNegP_Q")]
    PreQNegPQ,
    #[serde(rename = "PreQNegP_P")]
    PreQNegPP,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::AccQ, TaskKind::LowDisAccQ, TaskKind::PreQNegPQ, TaskKind::PreQNegPP];

    pub fn family(self) -> Family {
        match self {
            TaskKind::AccQ => Family::AccQ,
            TaskKind::LowDisAccQ => Family::LowDisAccQ,
            TaskKind::PreQNegPQ | TaskKind::PreQNegPP => Family::PreQNegP,
        }
    }

    pub fn default_grid(self) -> Vec<AsgmSpec> {
        match self {
            TaskKind::AccQ => ACCURACY_GRID.iter().map(|&q| AsgmSpec::acc_q(q)).collect(),
            TaskKind::LowDisAccQ => ACCURACY_GRID.iter().map(|&q| AsgmSpec::low_dis_acc_q(q)).collect(),
            TaskKind::PreQNegPQ => {
                ACCURACY_GRID.iter().map(|&q| AsgmSpec::pre_q_neg_p(q, FIXED_P_FOR_Q_TASK)).collect()
            }
            TaskKind::PreQNegPP => {
                FALSE_POSITIVE_GRID.iter().map(|&p| AsgmSpec::pre_q_neg_p(FIXED_Q_FOR_P_TASK, p)).collect()
            }
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaskKind::AccQ => "AccQ",
            TaskKind::LowDisAccQ => "LowDisAccQ",
            TaskKind::PreQNegPQ => "PreQNegP_Q",
            TaskKind::PreQNegPP => "PreQNegP_P",
        })
    }
}

impl std::str::FromStr for TaskKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown task {s:?}, expected AccQ, LowDisAccQ, PreQNegP_Q or PreQNegP_P")))
    }
}

/// One RankEval task: a model grid swept over noise levels and datasets.
///
/// The harness overrides each model's `sigma` with the sweep value and its
/// `seed` with one derived from `(seed, dataset seed)`, so all models on a
/// dataset share a coupled random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: TaskKind,
    pub model_grid: Vec<AsgmSpec>,
    pub sigma_grid: Vec<f64>,
    pub dataset_suite: Vec<SynthDatasetSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl TaskSpec {
    /// Default grid, `σ ∈ {0, 0.05, 0.1}`, the desk dataset suite.
    pub fn desk(task: TaskKind, seed: u64) -> Self {
        Self {
            task,
            model_grid: task.default_grid(),
            sigma_grid: SIGMA_GRID.to_vec(),
            dataset_suite: SynthDatasetSpec::desk_suite(seed),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        expected_ranking(self.task, &self.model_grid)?;
        if self.model_grid.len() < 2 {
            return Err(invalid("a task needs at least two models to rank"));
        }
        if self.sigma_grid.is_empty() || self.dataset_suite.is_empty() {
            return Err(invalid("sigma grid and dataset suite must be nonempty"));
        }
        if let Some(s) = self.sigma_grid.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(invalid(format!("sigma must be finite and >= 0, got {s}")));
        }
        for d in &self.dataset_suite {
            d.validate()?;
        }
        Ok(())
    }
}

/// Rank agreement of one metric on one dataset at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRank {
    pub dataset: String,
    pub sigma: f64,
    /// Metric value per model, `None` where the metric failed.
    pub values: Vec<Option<f64>>,
    /// Present only when every model produced a value.
    pub ranks: Option<Vec<usize>>,
    pub tied: bool,
    pub spearman: Option<f64>,
    pub kendall: Option<f64>,
    pub mean_rank_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub metric_name: String,
    pub task: TaskKind,
    /// `None` for the row averaged over the noise grid.
    pub sigma: Option<f64>,
    pub spearman: Option<f64>,
    pub kendall: Option<f64>,
    pub mean_rank_deviation: Option<f64>,
    /// Datasets that produced a ranking.
    pub datasets_ranked: usize,
    /// Datasets where at least two models tied on this metric.
    pub tied_datasets: usize,
    pub per_dataset: Vec<DatasetRank>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Runs every metric of `metrics` over the task and reports rank agreement per
/// noise level and averaged over the noise grid. Output order: for each
/// metric, one report per `σ` followed by the averaged report.
pub fn run_task(spec: &TaskSpec, metrics: &MetricRegistry) -> Result<Vec<RankReport>> {
    spec.validate()?;
    if metrics.is_empty() {
        return Err(invalid("metric registry is empty"));
    }
    let expected = expected_ranking(spec.task, &spec.model_grid)?;

    // values[dataset][sigma][metric][model]
    let values: Vec<Vec<Vec<Vec<Option<f64>>>>> = spec
        .dataset_suite
        .par_iter()
        .map(|dataset| {
            let labels = generate_labels(dataset)?;
            let stream = mix_seed(&[spec.seed, dataset.seed]);
            spec.sigma_grid
                .iter()
                .map(|&sigma| {
                    let mut per_metric = vec![Vec::with_capacity(spec.model_grid.len()); metrics.len()];
                    for model in &spec.model_grid {
                        let model = model.with_sigma(sigma).with_seed(stream);
                        let scores = generate_scores(&model, &labels)?;
                        for (slot, metric) in per_metric.iter_mut().zip(metrics.iter()) {
                            slot.push(metric.evaluate(&scores, &labels).ok().map(|v| v.value));
                        }
                    }
                    Ok(per_metric)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::new();
    for (m, metric) in metrics.iter().enumerate() {
        let mut per_sigma = Vec::new();
        for (s, &sigma) in spec.sigma_grid.iter().enumerate() {
            let per_dataset: Vec<DatasetRank> = spec
                .dataset_suite
                .iter()
                .enumerate()
                .map(|(d, dataset)| {
                    let vals = values[d][s][m].clone();
                    let complete: Option<Vec<f64>> = vals.iter().copied().collect();
                    let ranking = complete.map(|v| ranks_from_values(&v, metric.higher_is_better()));
                    let stat = |f: fn(&[usize], &[usize]) -> Result<f64>| {
                        ranking.as_ref().and_then(|r| f(&expected.ranks, &r.ranks).ok())
                    };
                    DatasetRank {
                        dataset: dataset.name.clone(),
                        sigma,
                        spearman: stat(spearman),
                        kendall: stat(kendall),
                        mean_rank_deviation: stat(mean_rank_deviation),
                        tied: ranking.as_ref().is_some_and(|r| r.tied),
                        ranks: ranking.map(|r| r.ranks),
                        values: vals,
                    }
                })
                .collect();
            per_sigma.push(RankReport {
                metric_name: metric.name().to_owned(),
                task: spec.task,
                sigma: Some(sigma),
                spearman: mean(per_dataset.iter().map(|d| d.spearman)),
                kendall: mean(per_dataset.iter().map(|d| d.kendall)),
                mean_rank_deviation: mean(per_dataset.iter().map(|d| d.mean_rank_deviation)),
                datasets_ranked: per_dataset.iter().filter(|d| d.ranks.is_some()).count(),
                tied_datasets: per_dataset.iter().filter(|d| d.tied).count(),
                per_dataset,
            });
        }
        let averaged = RankReport {
            metric_name: metric.name().to_owned(),
            task: spec.task,
            sigma: None,
            spearman: mean(per_sigma.iter().map(|r| r.spearman)),
            kendall: mean(per_sigma.iter().map(|r| r.kendall)),
            mean_rank_deviation: mean(per_sigma.iter().map(|r| r.mean_rank_deviation)),
            datasets_ranked: per_sigma.iter().map(|r| r.datasets_ranked).sum(),
            tied_datasets: per_sigma.iter().map(|r| r.tied_datasets).sum(),
            per_dataset: Vec::new(),
        };
        reports.extend(per_sigma);
        reports.push(averaged);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asgm::VarianceClass;
    use crate::baseline::DEFAULT_THRESHOLD;
    use crate::cce::CceConfig;
    use crate::registry::{FnMetric, MetricRegistry};
    use crate::series::{LabelSeries, ScoreSeries};

    fn small_suite() -> Vec<SynthDatasetSpec> {
        (0..2)
            .map(|i| SynthDatasetSpec {
                name: format!("small-{i}"),
                ts_length: 2000,
                segments: 8,
                seg_len_min: 20,
                seg_len_max: 40,
                variance_class: VarianceClass::Low,
                seed: 100 + i,
            })
            .collect()
    }

    fn small_task(task: TaskKind) -> TaskSpec {
        TaskSpec { dataset_suite: small_suite(), ..TaskSpec::desk(task, 1) }
    }

    #[test]
    fn task_names_round_trip() {
        for t in TaskKind::ALL {
            assert_eq!(t.to_string().parse::<TaskKind>().unwrap(), t);
        }
        assert!("PreQ".parse::<TaskKind>().is_err());
    }

    #[test]
    fn default_grids_validate() {
        for t in TaskKind::ALL {
            TaskSpec::desk(t, 0).validate().unwrap();
        }
    }

    #[test]
    fn report_layout_and_determinism() {
        let registry = MetricRegistry::with_builtins(CceConfig::default(), DEFAULT_THRESHOLD);
        let spec = small_task(TaskKind::AccQ);
        let a = run_task(&spec, &registry).unwrap();
        assert_eq!(a.len(), registry.len() * (spec.sigma_grid.len() + 1));
        assert_eq!(a[0].metric_name, "cce");
        assert_eq!(a[3].sigma, None);
        assert_eq!(a[0].per_dataset.len(), 2);
        assert_eq!(a, run_task(&spec, &registry).unwrap());
    }

    #[test]
    fn cce_ranks_small_tasks_perfectly() {
        let registry = MetricRegistry::with_builtins(CceConfig::default(), DEFAULT_THRESHOLD).select(&["cce"]).unwrap();
        for task in TaskKind::ALL {
            for r in run_task(&small_task(task), &registry).unwrap() {
                assert_eq!(r.spearman, Some(1.0), "{task} {:?}", r.sigma);
                assert_eq!(r.mean_rank_deviation, Some(0.0));
            }
        }
    }

    #[test]
    fn failing_metric_cells_are_absent() {
        let mut registry = MetricRegistry::new();
        registry
            .register(FnMetric::new("picky", true, |s: &ScoreSeries, _: &LabelSeries| {
                if s.values().iter().any(|&v| v < 0.0) {
                    Err(crate::Error::Undefined("negative score".into()))
                } else {
                    Ok(s.values().iter().sum())
                }
            }))
            .unwrap();
        let spec = TaskSpec { sigma_grid: vec![0.0, 0.1], ..small_task(TaskKind::AccQ) };
        let reports = run_task(&spec, &registry).unwrap();
        assert_eq!(reports[0].datasets_ranked, 2);
        // Gaussian noise drives some scores negative.
        assert_eq!(reports[1].datasets_ranked, 0);
        assert_eq!(reports[1].spearman, None);
        assert_eq!(reports[2].spearman, reports[0].spearman);
    }

    #[test]
    fn lower_is_better_metrics_are_flipped() {
        let mut registry = MetricRegistry::new();
        registry
            .register(FnMetric::new("miss_mass", false, |s: &ScoreSeries, y: &LabelSeries| {
                Ok(s.values().iter().zip(y.values()).map(|(&v, &l)| if l == 1 { 1.0 - v } else { v }).sum())
            }))
            .unwrap();
        let spec = TaskSpec { sigma_grid: vec![0.0], ..small_task(TaskKind::AccQ) };
        assert_eq!(run_task(&spec, &registry).unwrap()[0].spearman, Some(1.0));
    }

    #[test]
    fn invalid_tasks_rejected() {
        let registry = MetricRegistry::with_builtins(CceConfig::default(), DEFAULT_THRESHOLD);
        let mut spec = small_task(TaskKind::AccQ);
        spec.sigma_grid = vec![-0.1];
        assert!(run_task(&spec, &registry).is_err());
        assert!(run_task(&small_task(TaskKind::AccQ), &MetricRegistry::new()).is_err());
    }
}
