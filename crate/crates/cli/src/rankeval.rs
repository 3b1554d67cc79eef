use anyhow::Result;
use cce_core::rankeval::SIGMA_GRID;
use cce_core::{run_task, RankReport, TaskKind, TaskSpec};
use serde::{Deserialize, Serialize};

use crate::config::{resolve_datasets, DatasetEntry, MetricSettings};
use crate::io::{fmt_fixed, fmt_value, input_error, CsvDoc, OutputSet};

pub const SCHEMA: &str = "cce-cli.rankeval/1";
pub const DEFAULT_SEED: u64 = 42;

/// Input of `cce rankeval`. Every field is optional; `config.json` in the
/// output directory holds the effective values and reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankevalConfig {
    pub schema: String,
    pub seed: u64,
    pub tasks: Vec<TaskKind>,
    /// Metric names; empty selects every built-in metric.
    pub metrics: Vec<String>,
    pub sigma_grid: Vec<f64>,
    /// Dataset suite; absent selects the built-in desk suite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datasets: Option<Vec<DatasetEntry>>,
    pub settings: MetricSettings,
    /// Also emit per-dataset values and ranks.
    pub detail: bool,
}

impl Default for RankevalConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA.to_owned(),
            seed: DEFAULT_SEED,
            tasks: TaskKind::ALL.to_vec(),
            metrics: Vec::new(),
            sigma_grid: SIGMA_GRID.to_vec(),
            datasets: None,
            settings: MetricSettings::default(),
            detail: false,
        }
    }
}

pub struct RankevalOutcome {
    pub config: RankevalConfig,
    pub reports: Vec<RankReport>,
    pub files: OutputSet,
}

#[derive(Serialize)]
struct ReportRow<'a> {
    metric: &'a str,
    task: TaskKind,
    sigma: Option<f64>,
    spearman: Option<f64>,
    kendall: Option<f64>,
    mean_rank_deviation: Option<f64>,
    datasets_ranked: usize,
    tied_datasets: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'static str,
    command: &'static str,
    config: &'a RankevalConfig,
    reports: Vec<ReportRow<'a>>,
}

fn sigma_cell(sigma: Option<f64>) -> String {
    sigma.map_or_else(|| "avg".to_owned(), |s| format!("{s}"))
}

pub fn run_rankeval(config: &RankevalConfig) -> Result<RankevalOutcome> {
    let mut config = config.clone();
    config.schema = SCHEMA.to_owned();
    config.settings.validate()?;
    if config.tasks.is_empty() {
        return Err(input_error("no tasks selected"));
    }
    let registry = config.settings.registry();
    let registry = if config.metrics.is_empty() { registry } else { registry.select(&config.metrics)? };
    config.metrics = registry.names().iter().map(|s| s.to_string()).collect();
    let datasets = match &config.datasets {
        Some(entries) => resolve_datasets(entries, config.seed)?,
        None => cce_core::SynthDatasetSpec::desk_suite(config.seed),
    };

    let mut reports = Vec::new();
    for &task in &config.tasks {
        let spec = TaskSpec {
            task,
            model_grid: task.default_grid(),
            sigma_grid: config.sigma_grid.clone(),
            dataset_suite: datasets.clone(),
            seed: config.seed,
        };
        spec.validate()?;
        reports.extend(run_task(&spec, &registry)?);
    }

    let mut files = OutputSet::new();
    files.add_json("config.json", &config)?;
    files.add("rankeval.csv", table_csv(&config, &reports)?);
    files.add("rankeval_long.csv", long_csv(&config, &reports)?);
    if config.detail {
        files.add("rankeval_detail.csv", detail_csv(&config, &reports)?);
    }
    let rows = reports
        .iter()
        .map(|r| ReportRow {
            metric: &r.metric_name,
            task: r.task,
            sigma: r.sigma,
            spearman: r.spearman,
            kendall: r.kendall,
            mean_rank_deviation: r.mean_rank_deviation,
            datasets_ranked: r.datasets_ranked,
            tied_datasets: r.tied_datasets,
        })
        .collect();
    files.add_json("summary.json", &Summary { schema: SCHEMA, command: "rankeval", config: &config, reports: rows })?;
    Ok(RankevalOutcome { config, reports, files })
}

type Statistic = fn(&RankReport) -> Option<f64>;

/// Rows `(task, sigma, statistic)`, one column per metric, three decimals.
fn table_csv(config: &RankevalConfig, reports: &[RankReport]) -> Result<Vec<u8>> {
    let mut header = vec!["task", "sigma", "statistic"];
    header.extend(config.metrics.iter().map(String::as_str));
    let mut doc = CsvDoc::new("cce-cli.rankeval.table/1", config, &header)?;
    let sigmas: Vec<Option<f64>> = config.sigma_grid.iter().map(|&s| Some(s)).chain([None]).collect();
    for &task in &config.tasks {
        for &sigma in &sigmas {
            let find =
                |metric: &str| reports.iter().find(|r| r.task == task && r.metric_name == metric && r.sigma == sigma);
            let stats: [(&str, Statistic); 3] =
                [("Sp", |r| r.spearman), ("Kd", |r| r.kendall), ("MD", |r| r.mean_rank_deviation)];
            for (label, stat) in stats {
                let mut row = vec![task.to_string(), sigma_cell(sigma), label.to_owned()];
                row.extend(config.metrics.iter().map(|m| fmt_fixed(find(m).and_then(stat), 3)));
                doc.row(row)?;
            }
        }
    }
    doc.finish()
}

fn long_csv(config: &RankevalConfig, reports: &[RankReport]) -> Result<Vec<u8>> {
    let mut doc = CsvDoc::new(
        "cce-cli.rankeval.long/1",
        config,
        &["metric", "task", "sigma", "spearman", "kendall", "mean_rank_deviation", "datasets_ranked", "tied_datasets"],
    )?;
    for r in reports {
        doc.row([
            r.metric_name.clone(),
            r.task.to_string(),
            sigma_cell(r.sigma),
            fmt_value(r.spearman),
            fmt_value(r.kendall),
            fmt_value(r.mean_rank_deviation),
            r.datasets_ranked.to_string(),
            r.tied_datasets.to_string(),
        ])?;
    }
    doc.finish()
}

fn detail_csv(config: &RankevalConfig, reports: &[RankReport]) -> Result<Vec<u8>> {
    let mut doc = CsvDoc::new(
        "cce-cli.rankeval.detail/1",
        config,
        &["metric", "task", "sigma", "dataset", "model", "value", "rank", "expected_rank", "tied"],
    )?;
    for r in reports {
        let grid = r.task.default_grid();
        let expected = cce_core::rankeval::expected_ranking(r.task, &grid)?;
        for d in &r.per_dataset {
            for (i, model) in grid.iter().enumerate() {
                doc.row([
                    r.metric_name.clone(),
                    r.task.to_string(),
                    format!("{}", d.sigma),
                    d.dataset.clone(),
                    model.label(),
                    fmt_value(d.values[i]),
                    d.ranks.as_ref().map(|rk| rk[i].to_string()).unwrap_or_default(),
                    expected.ranks[i].to_string(),
                    d.tied.to_string(),
                ])?;
            }
        }
    }
    doc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RankevalConfig {
        RankevalConfig {
            tasks: vec![TaskKind::PreQNegPP],
            metrics: vec!["cce".into(), "auc_roc".into()],
            sigma_grid: vec![0.0, 0.1],
            datasets: Some(vec![
                serde_json::from_str(r#"{"preset": "10k-5seg-20L"}"#).unwrap(),
                serde_json::from_str(r#"{"preset": "10k-2seg-500L"}"#).unwrap(),
            ]),
            detail: true,
            ..Default::default()
        }
    }

    #[test]
    fn table_has_one_row_per_statistic_and_sigma() {
        let out = run_rankeval(&small()).unwrap();
        let table = std::str::from_utf8(out.files.get("rankeval.csv").unwrap()).unwrap();
        let body: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "task,sigma,statistic,cce,auc_roc");
        assert_eq!(body.len(), 1 + 3 * 3);
        assert!(body[1].starts_with("PreQNegP_P,0,Sp,1.000,"), "{}", body[1]);
        assert!(body[7].starts_with("PreQNegP_P,avg,Sp,"));
        let detail = std::str::from_utf8(out.files.get("rankeval_detail.csv").unwrap()).unwrap();
        assert_eq!(detail.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 2 * 2 * 4);
    }

    #[test]
    fn effective_config_reproduces_the_run() {
        let first = run_rankeval(&small()).unwrap();
        let text = std::str::from_utf8(first.files.get("config.json").unwrap()).unwrap();
        let again: RankevalConfig = serde_json::from_str(text).unwrap();
        let second = run_rankeval(&again).unwrap();
        for name in first.files.names() {
            assert_eq!(first.files.get(name), second.files.get(name), "{name}");
        }
    }

    #[test]
    fn unknown_metric_lists_registered_ones() {
        let cfg = RankevalConfig { metrics: vec!["vus_pr".into()], ..small() };
        let err = run_rankeval(&cfg).err().unwrap();
        assert_eq!(crate::io::exit_code(&err), 2);
        let msg = format!("{err:#}");
        for name in ["cce", "auc_roc", "f1", "f1_pa", "reduced_f1"] {
            assert!(msg.contains(name), "{msg}");
        }
    }
}
