//! Confidence-consistency evaluation (CCE) for time-series anomaly detection,
//! baseline metrics, synthetic score generators and the RankEval benchmark.
//!
//! ```
//! use cce_core::{cce, CceConfig, LabelSeries, ScoreSeries};
//!
//! let labels = LabelSeries::new(vec![0, 0, 1, 1, 0]).unwrap();
//! let scores = ScoreSeries::new(vec![0.0, 0.1, 0.9, 1.0, 0.0]).unwrap();
//! let result = cce(&scores, &labels, &CceConfig::default()).unwrap();
//! assert!(result.s_cce > 0.9);
//! ```

pub mod asgm;
pub mod baseline;
pub mod beta;
pub mod cce;
pub mod error;
pub mod rankeval;
pub mod registry;
pub mod series;

pub use asgm::{generate_labels, generate_scores, AsgmSpec, Family, SynthDatasetSpec, VarianceClass};
pub use baseline::{auc_roc, f1, f1_pa, reduced_f1, BinaryPrediction, MetricValue, DEFAULT_THRESHOLD};
pub use beta::{event_uncertainty, fit_beta, moments, BetaFit, BetaShape, MomentStats};
pub use cce::{
    anomaly_confidence, cce, consistency, event_level_score, global_score, normal_confidence, CceBreakdown, CceConfig,
    EventScore, Mode,
};
pub use error::{Error, Result};
pub use rankeval::{run_task, RankReport, TaskKind, TaskSpec};
pub use registry::{Metric, MetricRegistry};
pub use series::{extract_events, normalize, Event, EventKind, EventPartition, LabelSeries, ScoreSeries};
