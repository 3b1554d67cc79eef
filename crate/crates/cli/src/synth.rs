use anyhow::Result;
use cce_core::asgm::mix_seed;
use cce_core::{extract_events, generate_labels, generate_scores, AsgmSpec, SynthDatasetSpec};
use serde::{Deserialize, Serialize};

use crate::config::{resolve_datasets, DatasetEntry};
use crate::io::{self, check_file_stem, input_error, CsvDoc, OutputSet};

pub const SCHEMA: &str = "cce-cli.synth/1";

/// Input of `cce synth`. The manifest written by a run has the same shape
/// (plus a `files` list, ignored on input), so it can be fed back in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub datasets: Vec<DatasetEntry>,
    /// Score generators applied to every dataset.
    #[serde(default)]
    pub models: Vec<AsgmSpec>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SynthInput {
    List(Vec<DatasetEntry>),
    Spec(SynthSpec),
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let input: SynthInput =
            serde_json::from_str(text).map_err(|e| input_error(format!("invalid synth spec: {e}")))?;
        Ok(match input {
            SynthInput::List(datasets) => SynthSpec { datasets, ..Default::default() },
            SynthInput::Spec(spec) => spec,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub file: String,
    pub kind: String,
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Seed of the random stream that produced the file.
    pub seed: u64,
    pub length: usize,
    pub anomaly_points: usize,
    pub anomaly_events: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema: &'static str,
    pub seed: u64,
    pub datasets: Vec<DatasetEntry>,
    pub models: Vec<AsgmSpec>,
    pub files: Vec<ManifestFile>,
}

pub fn scores_file_name(dataset: &str, model: &AsgmSpec) -> String {
    format!("{dataset}.{}.scores.csv", model.label())
}

/// Generates every dataset (and score series) of `spec`.
pub fn run_synth(spec: &SynthSpec) -> Result<(Manifest, OutputSet)> {
    let datasets = resolve_datasets(&spec.datasets, spec.seed)?;
    for d in &datasets {
        check_file_stem(&d.name)?;
    }
    for (i, m) in spec.models.iter().enumerate() {
        m.validate().map_err(|e| input_error(format!("model {}: {e}", m.label())))?;
        if spec.models[..i].iter().any(|o| o.label() == m.label()) {
            return Err(input_error(format!("duplicate model {}", m.label())));
        }
    }

    let mut out = OutputSet::new();
    let mut files = Vec::new();
    for d in &datasets {
        let labels = generate_labels(d).map_err(|e| input_error(format!("dataset {:?}: {e}", d.name)))?;
        let events = extract_events(&labels).anomalies().len();
        let anomaly_points = labels.anomaly_count();
        let bytes = io::labels_file(&labels);
        let name = format!("{}.labels.csv", d.name);
        files.push(ManifestFile {
            file: name.clone(),
            kind: "labels".into(),
            dataset: d.name.clone(),
            model: None,
            seed: d.seed,
            length: labels.len(),
            anomaly_points,
            anomaly_events: events,
            sha256: io::sha256_hex(&bytes),
        });
        out.add(name, bytes);

        for m in &spec.models {
            let seed = mix_seed(&[m.seed, d.seed]);
            let scores = generate_scores(&m.with_seed(seed), &labels)?;
            let bytes = io::scores_file(&scores);
            let name = scores_file_name(&d.name, m);
            files.push(ManifestFile {
                file: name.clone(),
                kind: "scores".into(),
                dataset: d.name.clone(),
                model: Some(m.label()),
                seed,
                length: scores.len(),
                anomaly_points,
                anomaly_events: events,
                sha256: io::sha256_hex(&bytes),
            });
            out.add(name, bytes);
        }
    }

    let manifest = Manifest {
        schema: SCHEMA,
        seed: spec.seed,
        datasets: datasets.iter().cloned().map(DatasetEntry::Full).collect(),
        models: spec.models.clone(),
        files,
    };
    out.add_json("manifest.json", &manifest)?;
    out.add("manifest.csv", manifest_csv(&manifest, &datasets)?);
    Ok((manifest, out))
}

fn manifest_csv(manifest: &Manifest, datasets: &[SynthDatasetSpec]) -> Result<Vec<u8>> {
    let config =
        SynthSpec { seed: manifest.seed, datasets: manifest.datasets.clone(), models: manifest.models.clone() };
    let mut doc = CsvDoc::new(
        "cce-cli.synth.manifest/1",
        &config,
        &[
            "file",
            "kind",
            "dataset",
            "model",
            "seed",
            "ts_length",
            "segments",
            "seg_len_min",
            "seg_len_max",
            "variance_class",
            "anomaly_points",
            "anomaly_events",
            "sha256",
        ],
    )?;
    for f in &manifest.files {
        let d = datasets.iter().find(|d| d.name == f.dataset).expect("file belongs to a dataset");
        doc.row([
            f.file.clone(),
            f.kind.clone(),
            f.dataset.clone(),
            f.model.clone().unwrap_or_default(),
            f.seed.to_string(),
            d.ts_length.to_string(),
            d.segments.to_string(),
            d.seg_len_min.to_string(),
            d.seg_len_max.to_string(),
            format!("{:?}", d.variance_class),
            f.anomaly_points.to_string(),
            f.anomaly_events.to_string(),
            f.sha256.clone(),
        ])?;
    }
    doc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_gives_empty_manifest() {
        let (manifest, out) = run_synth(&SynthSpec::from_json("[]").unwrap()).unwrap();
        assert!(manifest.files.is_empty());
        assert_eq!(out.names().collect::<Vec<_>>(), ["manifest.json", "manifest.csv"]);
    }

    #[test]
    fn manifest_round_trips_to_identical_output() {
        let spec = SynthSpec::from_json(
            r#"{"seed": 3, "datasets": [{"preset": "10k-2seg-500L"}],
                "models": [{"family": "AccQ", "q": 0.7, "sigma": 0.05}]}"#,
        )
        .unwrap();
        let (_, first) = run_synth(&spec).unwrap();
        let manifest_text = std::str::from_utf8(first.get("manifest.json").unwrap()).unwrap();
        let (_, second) = run_synth(&SynthSpec::from_json(manifest_text).unwrap()).unwrap();
        for name in first.names() {
            assert_eq!(first.get(name), second.get(name), "{name}");
        }
    }

    #[test]
    fn duplicate_models_rejected() {
        let spec = SynthSpec::from_json(
            r#"{"datasets": [{"preset": "10k-2seg-500L"}],
                "models": [{"family": "AccQ", "q": 0.7}, {"family": "AccQ", "q": 0.7, "seed": 1}]}"#,
        )
        .unwrap();
        assert!(run_synth(&spec).is_err());
    }
}
