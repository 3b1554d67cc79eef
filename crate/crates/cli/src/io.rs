//! Input parsing and report writing.
//!
//! Score and label files hold one value per line, optionally preceded by a
//! single header line. Blank lines and lines starting with `#` are skipped.
//! Reports are CSV files whose first lines are `#` comments carrying the
//! schema and the effective configuration, so each file documents the run
//! that produced it.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cce_core::{LabelSeries, ScoreSeries};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// User-facing input problem; the binary maps it to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

/// 2 for bad input anywhere in the error chain, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let bad_input = err.chain().any(|cause| {
        cause.is::<InputError>()
            || matches!(cause.downcast_ref::<cce_core::Error>(), Some(cce_core::Error::InvalidInput(_)))
    });
    if bad_input {
        2
    } else {
        1
    }
}

fn parse_column<T>(text: &str, source: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let mut values = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let first_content = !seen_content;
        seen_content = true;
        match parse(line) {
            Some(v) => values.push(v),
            None if first_content && looks_like_header(line) => {}
            None => return Err(input_error(format!("{source}:{}: expected {what}, found {line:?}", idx + 1))),
        }
    }
    if values.is_empty() {
        return Err(input_error(format!("{source}: no {what} values found")));
    }
    Ok(values)
}

fn looks_like_header(line: &str) -> bool {
    line.starts_with(|c: char| c.is_alphabetic() || c == '_' || c == '"') && line.parse::<f64>().is_err()
}

pub fn parse_scores(text: &str, source: &str) -> Result<ScoreSeries> {
    let values =
        parse_column(text, source, "a finite decimal score", |s| s.parse::<f64>().ok().filter(|v| v.is_finite()))?;
    Ok(ScoreSeries::new(values)?)
}

pub fn parse_labels(text: &str, source: &str) -> Result<LabelSeries> {
    let values = parse_column(text, source, "a 0/1 label", |s| match s {
        "0" => Some(0u8),
        "1" => Some(1u8),
        _ => None,
    })?;
    Ok(LabelSeries::new(values)?)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))
}

pub fn read_scores(path: &Path) -> Result<ScoreSeries> {
    parse_scores(&read_text(path)?, &path.display().to_string())
}

pub fn read_labels(path: &Path) -> Result<LabelSeries> {
    parse_labels(&read_text(path)?, &path.display().to_string())
}

/// Reads and deserializes a JSON configuration file.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| input_error(format!("{}: invalid configuration: {e}", path.display())))
}

pub fn scores_file(scores: &ScoreSeries) -> Vec<u8> {
    let mut out = String::with_capacity(scores.len() * 20 + 6);
    out.push_str("score\n");
    for v in scores.values() {
        out.push_str(&format!("{v}\n"));
    }
    out.into_bytes()
}

pub fn labels_file(labels: &LabelSeries) -> Vec<u8> {
    let mut out = Vec::with_capacity(labels.len() * 2 + 6);
    out.extend_from_slice(b"label\n");
    for &v in labels.values() {
        out.extend_from_slice(if v == 1 { b"1\n" } else { b"0\n" });
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip decimal form; empty for an absent value.
pub fn fmt_value(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

pub fn fmt_fixed(v: Option<f64>, digits: usize) -> String {
    v.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

/// CSV document with a `#` comment preamble.
pub struct CsvDoc {
    writer: csv::Writer<Vec<u8>>,
    preamble: Vec<u8>,
}

impl CsvDoc {
    pub fn new<C: Serialize>(schema: &str, config: &C, header: &[&str]) -> Result<Self> {
        let mut preamble = Vec::new();
        writeln!(preamble, "# schema={schema}")?;
        writeln!(preamble, "# config={}", serde_json::to_string(config)?)?;
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { writer, preamble })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(self) -> Result<Vec<u8>> {
        let mut out = self.preamble;
        out.extend(self.writer.into_inner().map_err(|e| anyhow::anyhow!("csv flush failed: {e}"))?);
        Ok(out)
    }
}

/// Output files held in memory until the whole run has succeeded.
#[derive(Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file into `dir` through a temporary file and a rename,
    /// so readers never observe a half-written file.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let target = dir.join(&name);
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
            tmp.write_all(&bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(&target).with_context(|| format!("cannot write {}", target.display()))?;
            written.push(target);
        }
        Ok(written)
    }
}

/// Rejects names that would escape the output directory or be awkward on disk.
pub fn check_file_stem(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(input_error(format!("name {name:?} is not usable as a file name (use letters, digits, '-', '_', '.')")))
    }
}
