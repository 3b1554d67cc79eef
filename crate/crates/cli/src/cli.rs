use std::path::PathBuf;

use anyhow::Result;
use cce_core::TaskKind;
use clap::{Args, Parser, Subcommand};

use crate::bench::{run_bench, BenchConfig};
use crate::config::{MetricArgs, MetricSettings};
use crate::eval::{run_eval, EvalOptions};
use crate::io::{read_json, OutputSet};
use crate::rankeval::{run_rankeval, RankevalConfig};
use crate::synth::{run_synth, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "cce", version, about = "Confidence-consistency evaluation for time-series anomaly scores")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one anomaly-score file against one label file.
    Eval(EvalArgs),
    /// Generate synthetic label and score files with a manifest.
    Synth(SynthArgs),
    /// Run the ranking benchmark over synthetic detectors.
    Rankeval(RankevalArgs),
    /// Measure metric latency over length, segment-count and task sweeps.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Score file: one decimal per line, optional single header line.
    #[arg(long)]
    pub scores: PathBuf,
    /// Label file: one 0/1 per line, optional single header line.
    #[arg(long)]
    pub labels: PathBuf,
    /// Comma-separated metric names (default: all built-in metrics).
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    #[command(flatten)]
    pub metric_args: MetricArgs,
    /// Report values multiplied by 100.
    #[arg(long)]
    pub scale100: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON dataset spec, a list of datasets, or a manifest from an earlier run.
    #[arg(long)]
    pub spec: PathBuf,
    /// Base seed for presets that do not carry their own.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise level applied to every model in the spec.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankevalArgs {
    /// JSON configuration; defaults to every task on the desk suite.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub tasks: Vec<TaskKind>,
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub metric_args: MetricArgs,
    /// Also write per-dataset values and ranks.
    #[arg(long)]
    pub detail: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON configuration; defaults to the built-in sweeps.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub metric_args: MetricArgs,
    #[arg(long)]
    pub out: PathBuf,
}

fn commit(files: OutputSet, out: &std::path::Path) -> Result<()> {
    for path in files.commit(out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval(a) => {
            let mut settings = MetricSettings::default();
            settings.apply(&a.metric_args);
            let outcome = run_eval(&EvalOptions {
                scores: a.scores,
                labels: a.labels,
                metrics: a.metrics,
                settings,
                scale100: a.scale100,
            })?;
            print!("{}", outcome.summary_text);
            commit(outcome.files, &a.out)
        }
        Command::Synth(a) => {
            let text = std::fs::read_to_string(&a.spec)
                .map_err(|e| crate::io::input_error(format!("cannot read {}: {e}", a.spec.display())))?;
            let mut spec = SynthSpec::from_json(&text)?;
            if let Some(seed) = a.seed {
                spec.seed = seed;
            }
            if let Some(sigma) = a.sigma {
                for m in &mut spec.models {
                    m.sigma = sigma;
                }
            }
            let (manifest, files) = run_synth(&spec)?;
            println!("{} files for {} datasets", manifest.files.len(), manifest.datasets.len());
            commit(files, &a.out)
        }
        Command::Rankeval(a) => {
            let mut config: RankevalConfig = match &a.config {
                Some(path) => read_json(path)?,
                None => RankevalConfig::default(),
            };
            if !a.tasks.is_empty() {
                config.tasks = a.tasks;
            }
            if !a.metrics.is_empty() {
                config.metrics = a.metrics;
            }
            if !a.sigma.is_empty() {
                config.sigma_grid = a.sigma;
            }
            if let Some(seed) = a.seed {
                config.seed = seed;
            }
            config.detail |= a.detail;
            config.settings.apply(&a.metric_args);
            let outcome = run_rankeval(&config)?;
            if let Some(table) = outcome.files.get("rankeval.csv") {
                for line in String::from_utf8_lossy(table).lines().filter(|l| !l.starts_with('#')) {
                    println!("{line}");
                }
            }
            commit(outcome.files, &a.out)
        }
        Command::Bench(a) => {
            let mut config: BenchConfig = match &a.config {
                Some(path) => read_json(path)?,
                None => BenchConfig::default(),
            };
            if !a.metrics.is_empty() {
                config.metrics = a.metrics;
            }
            if let Some(r) = a.repetitions {
                config.repetitions = r;
            }
            if let Some(seed) = a.seed {
                config.seed = seed;
            }
            config.settings.apply(&a.metric_args);
            let outcome = run_bench(&config)?;
            for fit in &outcome.fits {
                println!(
                    "{}: length slope {}, segment max/min {}",
                    fit.metric,
                    crate::io::fmt_fixed(fit.length_loglog_slope, 3),
                    crate::io::fmt_fixed(fit.segment_max_min_ratio, 3)
                );
            }
            commit(outcome.files, &a.out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "cce",
            "rankeval",
            "--tasks",
            "AccQ,PreQNegP_P",
            "--sigma",
            "0,0.05",
            "--mode",
            "strict",
            "--tau",
            "0.3",
            "--out",
            "x",
        ])
        .unwrap();
        let Command::Rankeval(a) = cli.command else { panic!() };
        assert_eq!(a.tasks, [TaskKind::AccQ, TaskKind::PreQNegPP]);
        assert_eq!(a.sigma, [0.0, 0.05]);
        assert_eq!(a.metric_args.mode, Some(cce_core::Mode::Strict));
    }

    #[test]
    fn bad_mode_rejected() {
        assert!(Cli::try_parse_from([
            "cce", "eval", "--scores", "a", "--labels", "b", "--mode", "loose", "--out", "o"
        ])
        .is_err());
    }
}
