//! Configuration pieces shared by several commands.

use anyhow::Result;
use cce_core::asgm::mix_seed;
use cce_core::{CceConfig, Mode, SynthDatasetSpec, DEFAULT_THRESHOLD};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::io::input_error;

/// Metric hyperparameters that can be set on the command line.
#[derive(Debug, Clone, Default, Args)]
pub struct MetricArgs {
    /// CCE confidence threshold τ in (0, 1).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Weight of anomaly events in the event-level CCE score.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weight of the pooled anomaly score in the global CCE score.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Confidence mode: strict (clamped at 0) or relaxed (signed).
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Decision threshold on normalized scores for F1, F1-PA and Reduced-F1.
    #[arg(long)]
    pub threshold: Option<f64>,
}

/// Effective metric settings recorded in every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricSettings {
    pub cce: CceConfig,
    pub threshold: f64,
}

impl Default for MetricSettings {
    fn default() -> Self {
        Self { cce: CceConfig::default(), threshold: DEFAULT_THRESHOLD }
    }
}

impl MetricSettings {
    pub fn apply(&mut self, args: &MetricArgs) {
        if let Some(t) = args.tau {
            self.cce.tau = t;
        }
        if let Some(a) = args.alpha {
            self.cce.anomaly_event_weight = a;
        }
        if let Some(e) = args.eta {
            self.cce.global_anomaly_weight = e;
        }
        if let Some(m) = args.mode {
            self.cce.mode = m;
        }
        if let Some(t) = args.threshold {
            self.threshold = t;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cce.validate()?;
        if !self.threshold.is_finite() {
            return Err(input_error(format!("threshold must be finite, got {}", self.threshold)));
        }
        Ok(())
    }

    pub fn registry(&self) -> cce_core::MetricRegistry {
        cce_core::MetricRegistry::with_builtins(self.cce, self.threshold)
    }
}

/// A dataset given either by preset name or by full parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetEntry {
    Preset(PresetRef),
    Full(SynthDatasetSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetRef {
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl DatasetEntry {
    /// Full spec; a preset without its own seed gets one derived from
    /// `(base_seed, index)`.
    pub fn resolve(&self, base_seed: u64, index: usize) -> Result<SynthDatasetSpec> {
        match self {
            DatasetEntry::Full(spec) => Ok(spec.clone()),
            DatasetEntry::Preset(p) => {
                let seed = p.seed.unwrap_or_else(|| mix_seed(&[base_seed, index as u64]));
                let mut spec = SynthDatasetSpec::preset(&p.preset, seed)?;
                if let Some(name) = &p.name {
                    spec.name = name.clone();
                }
                Ok(spec)
            }
        }
    }
}

/// Resolves entries and checks names are unique and feasible.
pub fn resolve_datasets(entries: &[DatasetEntry], base_seed: u64) -> Result<Vec<SynthDatasetSpec>> {
    let mut out: Vec<SynthDatasetSpec> = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let spec = entry.resolve(base_seed, i)?;
        if out.iter().any(|d| d.name == spec.name) {
            return Err(input_error(format!("duplicate dataset name {:?}", spec.name)));
        }
        spec.validate().map_err(|e| input_error(format!("dataset {:?}: {e}", spec.name)))?;
        out.push(spec);
    }
    Ok(out)
}
