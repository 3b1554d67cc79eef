//! Synthetic anomaly-score generator models (ASGM) and synthetic label sets.
//!
//! All models built on the same `(family, seed)` share one stream of uniforms
//! per time step, so models that differ only in `q` or `p` are coupled: raising
//! `q` turns a superset of points "correct". Noise comes from a second stream
//! keyed the same way and is scaled by `σ`, so a noisy series is exactly its
//! noiseless counterpart plus `σ·z`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::series::{LabelSeries, ScoreSeries};

const LABEL_STREAM: u64 = 0x6c61_6265_6c73;
const SCORE_STREAM: u64 = 0x7363_6f72_6573;
const NOISE_STREAM: u64 = 0x006e_6f69_7365;

/// Folds several words into one well-mixed 64-bit seed (splitmix64 finalizer).
pub fn mix_seed(parts: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    parts.iter().fold(0x5eed_u64, |acc, &p| splitmix(acc ^ splitmix(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Accuracy `q`, well separated bands: high `0.9 + 0.1U`, low `0.05U`.
    AccQ,
    /// Accuracy `q`, weakly separated bands: high `0.6 + 0.1U`, low `0.4U`.
    LowDisAccQ,
    /// Base score `0.1U`; anomaly points are raised to `0.9U + 0.1` with
    /// probability `q`, normal points with probability `p`.
    PreQNegP,
}

impl Family {
    fn tag(self) -> u64 {
        match self {
            Family::AccQ => 1,
            Family::LowDisAccQ => 2,
            Family::PreQNegP => 3,
        }
    }

    /// `(high, low)` score for a uniform draw `u`.
    fn bands(self, u: f64) -> (f64, f64) {
        match self {
            Family::AccQ => (0.9 + 0.1 * u, 0.05 * u),
            Family::LowDisAccQ => (0.6 + 0.1 * u, 0.4 * u),
            Family::PreQNegP => (0.9 * u + 0.1, 0.1 * u),
        }
    }

    /// Closed intervals `(high, low)` a noiseless score can fall in.
    pub fn band_limits(self) -> ((f64, f64), (f64, f64)) {
        match self {
            Family::AccQ => ((0.9, 1.0), (0.0, 0.05)),
            Family::LowDisAccQ => ((0.6, 0.7), (0.0, 0.4)),
            Family::PreQNegP => ((0.1, 1.0), (0.0, 0.1)),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::AccQ => "AccQ",
            Family::LowDisAccQ => "LowDisAccQ",
            Family::PreQNegP => "PreQNegP",
        })
    }
}

/// One synthetic detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsgmSpec {
    pub family: Family,
    /// Accuracy (AccQ families) or anomaly hit probability (PreQNegP), in `(0, 1]`.
    pub q: f64,
    /// False-positive rate; required by PreQNegP, ignored otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Standard deviation of additive Gaussian noise; 0 disables noise.
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl AsgmSpec {
    pub fn acc_q(q: f64) -> Self {
        Self { family: Family::AccQ, q, p: None, sigma: 0.0, seed: 0 }
    }

    pub fn low_dis_acc_q(q: f64) -> Self {
        Self { family: Family::LowDisAccQ, q, p: None, sigma: 0.0, seed: 0 }
    }

    pub fn pre_q_neg_p(q: f64, p: f64) -> Self {
        Self { family: Family::PreQNegP, q, p: Some(p), sigma: 0.0, seed: 0 }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Short model label such as `AccQ-q0.3-s0.05` or `PreQNegP-q0.9-p0.1`.
    pub fn label(&self) -> String {
        let mut s = format!("{}-q{}", self.family, self.q);
        if let (Family::PreQNegP, Some(p)) = (self.family, self.p) {
            s.push_str(&format!("-p{p}"));
        }
        if self.sigma > 0.0 {
            s.push_str(&format!("-s{}", self.sigma));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(invalid(format!("q must lie in (0, 1], got {}", self.q)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        match (self.family, self.p) {
            (Family::PreQNegP, None) => Err(invalid("PreQNegP requires a false-positive rate p")),
            (Family::PreQNegP, Some(p)) if !(0.0..=1.0).contains(&p) => {
                Err(invalid(format!("p must lie in [0, 1], got {p}")))
            }
            _ => Ok(()),
        }
    }
}

/// Generates one score per label. Output is not clipped.
pub fn generate_scores(spec: &AsgmSpec, labels: &LabelSeries) -> Result<ScoreSeries> {
    spec.validate()?;
    let mut draws = ChaCha8Rng::seed_from_u64(mix_seed(&[spec.seed, spec.family.tag(), SCORE_STREAM]));
    let p = spec.p.unwrap_or(0.0);
    let mut scores: Vec<f64> = labels
        .values()
        .iter()
        .map(|&y| {
            // Always two draws per step so coupled models stay aligned.
            let branch: f64 = draws.random();
            let u: f64 = draws.random();
            let (high, low) = spec.family.bands(u);
            let anomaly = y == 1;
            match spec.family {
                Family::AccQ | Family::LowDisAccQ => {
                    let correct = branch < spec.q;
                    if correct == anomaly {
                        high
                    } else {
                        low
                    }
                }
                Family::PreQNegP => {
                    let rate = if anomaly { spec.q } else { p };
                    if branch < rate {
                        high
                    } else {
                        low
                    }
                }
            }
        })
        .collect();
    if spec.sigma > 0.0 {
        let mut noise = ChaCha8Rng::seed_from_u64(mix_seed(&[spec.seed, spec.family.tag(), NOISE_STREAM]));
        for s in &mut scores {
            let z: f64 = noise.sample(StandardNormal);
            *s += spec.sigma * z;
        }
    }
    ScoreSeries::new(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarianceClass {
    Low,
    High,
}

/// Parameters of one synthetic label sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthDatasetSpec {
    pub name: String,
    pub ts_length: usize,
    /// Number of anomaly events.
    pub segments: usize,
    pub seg_len_min: usize,
    pub seg_len_max: usize,
    pub variance_class: VarianceClass,
    #[serde(default)]
    pub seed: u64,
}

/// `(name, length, segments, max segment length, min segment length)`.
const PRESETS: &[(&str, usize, usize, usize, usize)] = &[
    ("100k-20seg-50L", 100_000, 20, 60, 40),
    ("100k-200seg-50L", 100_000, 200, 60, 40),
    ("100k-20seg-50H", 100_000, 20, 99, 1),
    ("100k-200seg-50H", 100_000, 200, 99, 1),
    ("100k-50seg-20L", 100_000, 50, 30, 10),
    ("100k-500seg-20L", 100_000, 500, 30, 10),
    ("100k-50seg-20H", 100_000, 50, 39, 1),
    ("100k-500seg-20H", 100_000, 500, 39, 1),
    ("100k-10seg-100L", 100_000, 10, 110, 90),
    ("100k-100seg-100L", 100_000, 100, 110, 90),
    ("100k-10seg-100H", 100_000, 10, 199, 1),
    ("100k-100seg-100H", 100_000, 100, 199, 1),
    ("100k-2seg-500L", 100_000, 2, 550, 450),
    ("100k-20seg-500L", 100_000, 20, 550, 450),
    ("100k-2seg-500H", 100_000, 2, 999, 1),
    ("100k-20seg-500H", 100_000, 20, 999, 1),
    ("10k-2seg-50L", 10_000, 2, 60, 40),
    ("10k-20seg-50L", 10_000, 20, 60, 40),
    ("10k-2seg-50H", 10_000, 2, 99, 1),
    ("10k-20seg-50H", 10_000, 20, 99, 1),
    ("10k-5seg-20L", 10_000, 5, 30, 10),
    ("10k-50seg-20L", 10_000, 50, 30, 10),
    ("10k-5seg-20H", 10_000, 5, 39, 1),
    ("10k-50seg-20H", 10_000, 50, 39, 1),
    ("10k-1seg-100L", 10_000, 1, 110, 90),
    ("10k-10seg-100L", 10_000, 10, 110, 90),
    ("10k-1seg-100H", 10_000, 1, 199, 1),
    ("10k-10seg-100H", 10_000, 10, 199, 1),
    ("10k-2seg-500L", 10_000, 2, 550, 450),
    ("10k-2seg-500H", 10_000, 2, 999, 1),
];

/// Datasets used for the default RankEval run. Every one of them has several
/// hundred anomalous points on average, enough to separate `q` steps of 0.1.
pub const DESK_SUITE: &[&str] = &[
    "10k-2seg-50L",
    "10k-20seg-50L",
    "10k-20seg-50H",
    "10k-5seg-20L",
    "10k-50seg-20L",
    "10k-50seg-20H",
    "10k-10seg-100L",
    "10k-2seg-500L",
];

impl SynthDatasetSpec {
    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|p| p.0)
    }

    /// A named preset such as `10k-2seg-500L`.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let &(name, ts_length, segments, max, min) =
            PRESETS.iter().find(|p| p.0 == name).ok_or_else(|| invalid(format!("unknown dataset preset {name:?}")))?;
        Ok(Self {
            name: name.to_owned(),
            ts_length,
            segments,
            seg_len_min: min,
            seg_len_max: max,
            variance_class: if name.ends_with('H') { VarianceClass::High } else { VarianceClass::Low },
            seed,
        })
    }

    /// The default RankEval datasets, each with its own seed derived from `seed`.
    pub fn desk_suite(seed: u64) -> Vec<Self> {
        DESK_SUITE
            .iter()
            .enumerate()
            .map(|(i, name)| Self::preset(name, mix_seed(&[seed, i as u64])).expect("preset exists"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.ts_length == 0 {
            return Err(invalid(format!("{}: ts_length must be positive", self.name)));
        }
        if self.segments == 0 {
            return Ok(());
        }
        if self.seg_len_min == 0 || self.seg_len_min > self.seg_len_max {
            return Err(invalid(format!(
                "{}: need 1 <= seg_len_min <= seg_len_max, got {}..={}",
                self.name, self.seg_len_min, self.seg_len_max
            )));
        }
        // Worst case: every event at maximal length, one normal step around each.
        let needed = self.segments.checked_mul(self.seg_len_max).and_then(|v| v.checked_add(self.segments + 1));
        match needed {
            Some(needed) if needed <= self.ts_length => Ok(()),
            _ => Err(invalid(format!(
                "{}: {} segments of up to {} steps with separating gaps do not fit in {} steps",
                self.name, self.segments, self.seg_len_max, self.ts_length
            ))),
        }
    }
}

/// Places `segments` anomaly events uniformly at random, never touching each
/// other or either end of the series.
pub fn generate_labels(spec: &SynthDatasetSpec) -> Result<LabelSeries> {
    spec.validate()?;
    let mut labels = vec![0u8; spec.ts_length];
    if spec.segments == 0 {
        return LabelSeries::new(labels);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[spec.seed, LABEL_STREAM]));
    let lengths: Vec<usize> =
        (0..spec.segments).map(|_| rng.random_range(spec.seg_len_min..=spec.seg_len_max)).collect();
    let k = spec.segments;
    let spare = spec.ts_length - lengths.iter().sum::<usize>() - (k + 1);

    // Uniform composition of `spare` into k + 1 gaps via k distinct bars.
    let mut bars = index::sample(&mut rng, spare + k, k).into_vec();
    bars.sort_unstable();
    let mut pos = 0;
    let mut prev = 0;
    for (i, &len) in lengths.iter().enumerate() {
        let extra = bars[i] - prev;
        prev = bars[i] + 1;
        pos += 1 + extra;
        labels[pos..pos + len].fill(1);
        pos += len;
    }
    LabelSeries::new(labels)
}
