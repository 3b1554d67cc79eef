use std::path::{Path, PathBuf};

use anyhow::Result;
use cce_core::{cce, CceBreakdown, EventKind, MetricValue};
use serde::Serialize;

use crate::config::MetricSettings;
use crate::io::{self, fmt_value, input_error, CsvDoc, OutputSet};

pub const SCHEMA: &str = "cce-cli.eval/1";

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub scores: PathBuf,
    pub labels: PathBuf,
    /// Metric names; empty selects every built-in metric.
    pub metrics: Vec<String>,
    pub settings: MetricSettings,
    pub scale100: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricRow {
    pub name: String,
    /// Presentation value (multiplied by 100 under `--scale100`); absent when undefined.
    pub value: Option<f64>,
    pub raw_value: Option<f64>,
    pub params: std::collections::BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct EffectiveConfig<'a> {
    scores: &'a Path,
    labels: &'a Path,
    metrics: &'a [String],
    settings: &'a MetricSettings,
    scale: f64,
}

#[derive(Debug, Serialize)]
struct CceSummary {
    s_event: f64,
    s_anom_global: f64,
    s_norm_global: f64,
    s_global: f64,
    s_cce: f64,
    anomaly_events: usize,
    normal_events: usize,
    fallback_events: usize,
    missing_class: Option<EventKind>,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    schema: &'static str,
    command: &'static str,
    config: &'a EffectiveConfig<'a>,
    length: usize,
    anomaly_points: usize,
    scores_sha256: String,
    labels_sha256: String,
    metrics: &'a [MetricRow],
    cce: Option<CceSummary>,
}

pub struct EvalOutcome {
    pub metrics: Vec<MetricRow>,
    pub breakdown: Option<CceBreakdown>,
    pub files: OutputSet,
    pub summary_text: String,
}

/// Evaluates one score file against one label file. Nothing is written;
/// the caller commits `files`.
pub fn run_eval(opts: &EvalOptions) -> Result<EvalOutcome> {
    opts.settings.validate()?;
    let registry = opts.settings.registry();
    let selected = if opts.metrics.is_empty() { registry } else { registry.select(&opts.metrics)? };
    let metric_names: Vec<String> = selected.names().iter().map(|s| s.to_string()).collect();

    let scores_text =
        std::fs::read(&opts.scores).map_err(|e| input_error(format!("cannot read {}: {e}", opts.scores.display())))?;
    let labels_text =
        std::fs::read(&opts.labels).map_err(|e| input_error(format!("cannot read {}: {e}", opts.labels.display())))?;
    let scores = io::parse_scores(&String::from_utf8_lossy(&scores_text), &opts.scores.display().to_string())?;
    let labels = io::parse_labels(&String::from_utf8_lossy(&labels_text), &opts.labels.display().to_string())?;
    if scores.len() != labels.len() {
        return Err(input_error(format!(
            "length mismatch: {} has {} scores but {} has {} labels",
            opts.scores.display(),
            scores.len(),
            opts.labels.display(),
            labels.len()
        )));
    }

    let scale = if opts.scale100 { 100.0 } else { 1.0 };
    let mut rows = Vec::with_capacity(selected.len());
    for metric in selected.iter() {
        let row = match metric.evaluate(&scores, &labels) {
            Ok(MetricValue { name, value, params }) => {
                MetricRow { name, value: Some(value * scale), raw_value: Some(value), params, note: None }
            }
            Err(cce_core::Error::Undefined(why)) => MetricRow {
                name: metric.name().to_owned(),
                value: None,
                raw_value: None,
                params: Default::default(),
                note: Some(why),
            },
            Err(e) => return Err(e.into()),
        };
        rows.push(row);
    }

    let breakdown =
        if metric_names.iter().any(|n| n == "cce") { Some(cce(&scores, &labels, &opts.settings.cce)?) } else { None };

    let config = EffectiveConfig {
        scores: &opts.scores,
        labels: &opts.labels,
        metrics: &metric_names,
        settings: &opts.settings,
        scale,
    };
    let mut files = OutputSet::new();

    let mut doc = CsvDoc::new("cce-cli.eval.metrics/1", &config, &["metric", "value", "raw_value", "params", "note"])?;
    for r in &rows {
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        doc.row([
            r.name.clone(),
            fmt_value(r.value),
            fmt_value(r.raw_value),
            params.join(";"),
            r.note.clone().unwrap_or_default(),
        ])?;
    }
    files.add("metrics.csv", doc.finish()?);

    if let Some(b) = &breakdown {
        let mut doc = CsvDoc::new(
            "cce-cli.eval.events/1",
            &config,
            &["kind", "start", "end", "length", "mean", "uncertainty", "fitted", "confidence", "consistency", "score"],
        )?;
        for e in &b.per_event {
            let d = &e.detail;
            doc.row([
                format!("{:?}", e.event.kind).to_lowercase(),
                e.event.start.to_string(),
                e.event.end.to_string(),
                e.event.len().to_string(),
                format!("{}", d.mean),
                format!("{}", d.uncertainty),
                d.fitted.to_string(),
                format!("{}", d.confidence),
                format!("{}", d.consistency),
                format!("{}", d.score),
            ])?;
        }
        files.add("cce_events.csv", doc.finish()?);
    }

    let cce_summary = breakdown.as_ref().map(|b| CceSummary {
        s_event: b.s_event,
        s_anom_global: b.s_anom_global,
        s_norm_global: b.s_norm_global,
        s_global: b.s_global,
        s_cce: b.s_cce,
        anomaly_events: b.per_event.iter().filter(|e| e.event.kind == EventKind::Anomaly).count(),
        normal_events: b.per_event.iter().filter(|e| e.event.kind == EventKind::Normal).count(),
        fallback_events: b.fallback_events,
        missing_class: b.missing_class,
    });
    let summary_text = render_text(&rows, cce_summary.as_ref(), scores.len(), scale);
    files.add_json(
        "summary.json",
        &Summary {
            schema: SCHEMA,
            command: "eval",
            config: &config,
            length: scores.len(),
            anomaly_points: labels.anomaly_count(),
            scores_sha256: io::sha256_hex(&scores_text),
            labels_sha256: io::sha256_hex(&labels_text),
            metrics: &rows,
            cce: cce_summary,
        },
    )?;
    files.add("summary.txt", summary_text.clone().into_bytes());

    Ok(EvalOutcome { metrics: rows, breakdown, files, summary_text })
}

fn render_text(rows: &[MetricRow], cce: Option<&CceSummary>, len: usize, scale: f64) -> String {
    let mut out = format!("points: {len}\n");
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in rows {
        match (r.value, &r.note) {
            (Some(v), _) => out.push_str(&format!("{:width$}  {v:.6}\n", r.name)),
            (None, Some(note)) => out.push_str(&format!("{:width$}  undefined ({note})\n", r.name)),
            (None, None) => out.push_str(&format!("{:width$}  undefined\n", r.name)),
        }
    }
    if let Some(c) = cce {
        out.push_str(&format!(
            "cce breakdown: event {:.6}, global {:.6} (anomaly {:.6}, normal {:.6})\n",
            c.s_event * scale,
            c.s_global * scale,
            c.s_anom_global * scale,
            c.s_norm_global * scale
        ));
        out.push_str(&format!(
            "events: {} anomaly, {} normal, {} Beta fits fell back\n",
            c.anomaly_events, c.normal_events, c.fallback_events
        ));
        if let Some(kind) = c.missing_class {
            out.push_str(&format!("note: labels contain no {kind:?} points; its weight moved to the other class\n"));
        }
    }
    out
}
