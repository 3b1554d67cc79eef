//! Score and label sequences, min-max normalization and event segmentation.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A univariate sequence of anomaly scores. Never empty, every value finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries(Vec<f64>);

impl ScoreSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("score series is empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("score at index {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// See [`normalize`].
    pub fn normalized(&self) -> ScoreSeries {
        normalize(self)
    }
}

impl AsRef<[f64]> for ScoreSeries {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Binary ground truth, `1` marks an anomalous time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSeries(Vec<u8>);

impl LabelSeries {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("label series is empty"));
        }
        if let Some(i) = values.iter().position(|&v| v > 1) {
            return Err(invalid(format!("label at index {i} is {}, expected 0 or 1", values[i])));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn anomaly_count(&self) -> usize {
        self.0.iter().filter(|&&v| v == 1).count()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Anomaly,
    Normal,
}

impl EventKind {
    pub fn label(self) -> u8 {
        match self {
            EventKind::Anomaly => 1,
            EventKind::Normal => 0,
        }
    }

    fn from_label(label: u8) -> Self {
        if label == 1 {
            EventKind::Anomaly
        } else {
            EventKind::Normal
        }
    }
}

/// A maximal run of identical labels over the half-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub start: usize,
    pub end: usize,
    pub kind: EventKind,
}

impl Event {
    pub fn new(start: usize, end: usize, kind: EventKind) -> Result<Self> {
        if start >= end {
            return Err(invalid(format!("event [{start}, {end}) is empty")));
        }
        Ok(Self { start, end, kind })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    /// The event's slice of `values`, or an error when the event does not fit.
    pub fn slice<'a>(&self, values: &'a [f64]) -> Result<&'a [f64]> {
        if self.start >= self.end || self.end > values.len() {
            return Err(invalid(format!(
                "event [{}, {}) out of range for series of length {}",
                self.start,
                self.end,
                values.len()
            )));
        }
        Ok(&values[self.range()])
    }
}

/// Anomaly and normal events of one label sequence. Together they tile `[0, len)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventPartition {
    anomalies: Vec<Event>,
    normals: Vec<Event>,
    len: usize,
}

impl EventPartition {
    pub fn anomalies(&self) -> &[Event] {
        &self.anomalies
    }

    pub fn normals(&self) -> &[Event] {
        &self.normals
    }

    /// Length of the labelled series.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn event_count(&self) -> usize {
        self.anomalies.len() + self.normals.len()
    }

    /// All events in time order.
    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        let mut a = self.anomalies.iter().peekable();
        let mut n = self.normals.iter().peekable();
        std::iter::from_fn(move || match (a.peek(), n.peek()) {
            (Some(x), Some(y)) => {
                if x.start < y.start {
                    a.next()
                } else {
                    n.next()
                }
            }
            (Some(_), None) => a.next(),
            (None, _) => n.next(),
        })
    }

    pub fn shortest_event(&self) -> usize {
        self.iter().map(Event::len).min().unwrap_or(0)
    }

    /// Expands the partition back into a label sequence.
    pub fn to_labels(&self) -> LabelSeries {
        let mut out = vec![0u8; self.len];
        for e in &self.anomalies {
            out[e.range()].fill(1);
        }
        LabelSeries(out)
    }
}

/// Min-max normalizes scores into `[0, 1]`.
///
/// A constant series carries no ranking information and maps to `0.5`
/// everywhere, which puts both confidence terms of CCE at exactly zero for
/// the default threshold.
pub fn normalize(scores: &ScoreSeries) -> ScoreSeries {
    let (min, max) = scores.0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    let out = if range == 0.0 {
        vec![0.5; scores.len()]
    } else if range.is_finite() {
        scores.0.iter().map(|&v| ((v - min) / range).clamp(0.0, 1.0)).collect()
    } else {
        // max - min overflowed; halve everything first.
        let half = max / 2.0 - min / 2.0;
        scores.0.iter().map(|&v| ((v / 2.0 - min / 2.0) / half).clamp(0.0, 1.0)).collect()
    };
    ScoreSeries(out)
}

/// Splits labels into maximal runs; runs of `1` are anomaly events.
pub fn extract_events(labels: &LabelSeries) -> EventPartition {
    let values = &labels.0;
    let mut anomalies = Vec::new();
    let mut normals = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] != values[start] {
            let event = Event { start, end: i, kind: EventKind::from_label(values[start]) };
            match event.kind {
                EventKind::Anomaly => anomalies.push(event),
                EventKind::Normal => normals.push(event),
            }
            start = i;
        }
    }
    EventPartition { anomalies, normals, len: values.len() }
}
