//! Score timelines, event intervals, and frame-label derivation.
//!
//! A [`ScoreTimeline`] holds one anomaly score per *scored frame*: the raw
//! video is scored every `stride` frames, so scored frame `i` sits at
//! timestamp `(i * stride) / fps` seconds. Event boundaries are annotated in
//! seconds; [`derive_frame_labels`] turns them into binary per-frame labels
//! by testing each scored-frame timestamp against the half-open interval
//! `[start_s, end_s)` of every anomalous event.
//!
//! Timestamps are compared in exact rational arithmetic (an `f64` is a
//! rational), so labeling is deterministic and platform-independent.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Label used for non-anomalous events.
pub const NORMAL_LABEL: &str = "Normal";

/// Per-scored-frame anomaly scores with temporal calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTimeline {
    /// One score in `[0, 1]` per scored frame.
    pub scores: Vec<f64>,
    /// Raw frames per scored frame.
    pub stride: u32,
    /// Raw frames per second.
    pub fps: f64,
}

impl ScoreTimeline {
    pub fn new(scores: Vec<f64>, stride: u32, fps: f64) -> Result<Self> {
        let t = ScoreTimeline { scores, stride, fps };
        match t.validate() {
            v if v.is_empty() => Ok(t),
            v => Err(Error::Validation(v)),
        }
    }

    /// Number of scored frames.
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Collects every invariant violation; empty means ok. Never aborts
    /// mid-scan, so a caller sees all problems at once.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.scores.is_empty() {
            violations.push("empty timeline".to_string());
        }
        for (i, &s) in self.scores.iter().enumerate() {
            if !(0.0..=1.0).contains(&s) || !s.is_finite() {
                violations.push(format!("score[{i}] out of [0,1]: {s}"));
            }
        }
        if self.stride < 1 {
            violations.push(format!("stride must be >= 1, got {}", self.stride));
        }
        if !self.fps.is_finite() || self.fps <= 0.0 {
            violations.push(format!("fps must be > 0, got {}", self.fps));
        }
        violations
    }

    /// Timestamp of scored frame `i` in seconds, as an f64.
    pub fn timestamp(&self, i: usize) -> f64 {
        (i as f64 * self.stride as f64) / self.fps
    }
}

/// One annotated event with second-level boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventInterval {
    pub start_s: f64,
    pub end_s: f64,
    /// Anomaly category, or [`NORMAL_LABEL`].
    pub label: String,
}

impl EventInterval {
    pub fn new(start_s: f64, end_s: f64, label: impl Into<String>) -> Self {
        EventInterval { start_s, end_s, label: label.into() }
    }

    pub fn is_normal(&self) -> bool {
        self.label == NORMAL_LABEL
    }
}

/// Binary frame labels aligned index-for-index with a [`ScoreTimeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLabels {
    pub labels: Vec<u8>,
}

impl FrameLabels {
    pub fn new(labels: Vec<u8>) -> Self {
        FrameLabels { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Maximal runs of 1-labels as `[start, end)` index ranges.
    pub fn anomaly_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &l) in self.labels.iter().enumerate() {
            match (l, start) {
                (1, None) => start = Some(i),
                (0, Some(s)) => {
                    runs.push((s, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.labels.len()));
        }
        runs
    }
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Derives binary frame labels from event boundaries.
///
/// `labels[i] = 1` iff the timestamp `(i * stride) / fps` lies inside the
/// half-open interval `[start_s, end_s)` of at least one non-Normal event.
/// Overlapping anomalous events are OR-ed. The timestamp comparison is done
/// in exact rational arithmetic.
pub fn derive_frame_labels(
    events: &[EventInterval],
    t: usize,
    stride: u32,
    fps: f64,
) -> Result<FrameLabels> {
    if t < 1 {
        return Err(Error::parameter("frame count T must be >= 1"));
    }
    if stride < 1 {
        return Err(Error::parameter("stride must be >= 1"));
    }
    if !fps.is_finite() || fps <= 0.0 {
        return Err(Error::parameter(format!("fps must be > 0, got {fps}")));
    }
    let mut violations = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if e.start_s.is_nan() || e.end_s.is_nan() || e.end_s <= e.start_s || e.start_s < 0.0 {
            violations.push(format!(
                "event[{i}] ({}) has invalid interval [{}, {})",
                e.label, e.start_s, e.end_s
            ));
        }
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }

    // step = stride / fps seconds per scored frame, held exactly.
    let step = BigRational::new(BigInt::from(stride), BigInt::from(1)) / rational(fps);
    let anomalous: Vec<(BigRational, BigRational)> = events
        .iter()
        .filter(|e| !e.is_normal())
        .map(|e| (rational(e.start_s), rational(e.end_s)))
        .collect();

    let mut labels = vec![0u8; t];
    for (i, label) in labels.iter_mut().enumerate() {
        let ts = &step * BigRational::new(BigInt::from(i), BigInt::from(1));
        if anomalous.iter().any(|(s, e)| &ts >= s && &ts < e) {
            *label = 1;
        }
    }
    Ok(FrameLabels::new(labels))
}

/// Runs [`ScoreTimeline::validate`] and converts the result to `Result`.
pub fn validate_timeline(t: &ScoreTimeline) -> Result<()> {
    match t.validate() {
        v if v.is_empty() => Ok(()),
        v => Err(Error::Validation(v)),
    }
}
