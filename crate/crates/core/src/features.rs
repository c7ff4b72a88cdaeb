//! Per-record rhythm features, the rule-based VT criteria, episode
//! segmentation, and the pre/post-filter noise-effect check.
//!
//! The feature triple is: mean RR interval, mean QRS width, and heart-beat
//! rate (HBR, defined as 60 / mean RR). A segment is rule-positive for VT
//! when the rate sits strictly inside the tachycardia band (110, 250) bpm
//! *and* the QRS complexes are wide (> 120 ms); both thresholds are
//! configurable. Episodes are maximal runs of rule-positive beats; runs
//! lasting at least 30 s count as sustained.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{build_beat_table, BeatTable, DetectError, DetectorConfig};
use crate::ingest::EcgRecord;

/// Errors from feature extraction and the noise-effect check.
#[derive(Debug, Error)]
pub enum FeatureError {
    /// The requested window covers fewer than two beats.
    #[error("too few beats in window: {found}, need >= 2")]
    TooFewBeats { found: usize },
    /// Window bounds fall outside the beat table.
    #[error("window {start}..{end} out of bounds for {beats} beats")]
    WindowOutOfBounds { start: usize, end: usize, beats: usize },
    /// The raw and filtered records disagree in rate or length.
    #[error("records mismatch: fs {fs_a} vs {fs_b}, len {len_a} vs {len_b}")]
    MismatchedRecords { fs_a: f64, fs_b: f64, len_a: usize, len_b: usize },
    /// Peak detection failed on one of the inputs.
    #[error(transparent)]
    Detect(#[from] DetectError),
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// The per-segment feature triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Mean RR interval over the segment, seconds.
    pub mean_rr_s: f64,
    /// Mean QRS width over the segment, seconds.
    pub mean_qrs_s: f64,
    /// Heart-beat rate, 60 / mean_rr_s, beats per minute.
    pub hbr_bpm: f64,
}

impl FeatureVector {
    /// Feature values in the fixed order used by the classifiers:
    /// `[mean_rr_s, mean_qrs_s, hbr_bpm]`.
    pub fn as_array(&self) -> [f64; 3] {
        [self.mean_rr_s, self.mean_qrs_s, self.hbr_bpm]
    }

    /// Column names matching [`FeatureVector::as_array`].
    pub const FEATURE_NAMES: [&'static str; 3] = ["mean_rr_s", "mean_qrs_s", "hbr_bpm"];
}

/// Record-level rhythm class. Variant order is severity order, so
/// `max` picks the most severe label.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ClassLabel {
    NonVT,
    NonSustainedVT,
    SustainedVT,
}

impl ClassLabel {
    /// All labels in severity order.
    pub const ALL: [ClassLabel; 3] =
        [ClassLabel::NonVT, ClassLabel::NonSustainedVT, ClassLabel::SustainedVT];

    /// Canonical display name.
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassLabel::NonVT => "NonVT",
            ClassLabel::NonSustainedVT => "NonSustainedVT",
            ClassLabel::SustainedVT => "SustainedVT",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NonVT" => Ok(ClassLabel::NonVT),
            "NonSustainedVT" => Ok(ClassLabel::NonSustainedVT),
            "SustainedVT" => Ok(ClassLabel::SustainedVT),
            other => Err(format!("unknown class label: {other:?}")),
        }
    }
}

/// Segment-level verdict of the VT rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleVerdict {
    Vt,
    NonVt,
}

impl fmt::Display for RuleVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleVerdict::Vt => "VT",
            RuleVerdict::NonVt => "NonVT",
        })
    }
}

/// Thresholds of the VT rule: rate strictly inside
/// `(hbr_low_bpm, hbr_high_bpm)` and QRS strictly wider than `qrs_wide_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleConfig {
    pub hbr_low_bpm: f64,
    pub hbr_high_bpm: f64,
    pub qrs_wide_s: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self { hbr_low_bpm: 110.0, hbr_high_bpm: 250.0, qrs_wide_s: 0.12 }
    }
}

/// Episode segmentation knobs: minimum beats per episode and the
/// sustained-duration boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeConfig {
    pub min_run_beats: usize,
    pub sustained_s: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self { min_run_beats: 3, sustained_s: 30.0 }
    }
}

/// One detected VT episode. Spans not covered by any episode are NonVT by
/// definition, so only VT spans are emitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VtEpisode {
    /// Time of the first beat of the episode, seconds.
    pub start_s: f64,
    /// Time of the last beat of the episode, seconds.
    pub end_s: f64,
    /// Number of beats spanned, including the leading anchor beat.
    pub n_beats: usize,
    /// `SustainedVT` when the span lasts at least `sustained_s`.
    pub label: ClassLabel,
}

/// Outcome of comparing rule decisions before and after filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCheckResult {
    pub hbr_before_bpm: f64,
    pub hbr_after_bpm: f64,
    pub label_before: RuleVerdict,
    pub label_after: RuleVerdict,
    /// True exactly when the rule verdict flipped.
    pub criticality_changed: bool,
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Mean RR, mean QRS width, and HBR over a window of beat indices.
///
/// The window is a half-open range of beat indices and must cover at least
/// two beats (one RR interval).
pub fn segment_features(
    beats: &BeatTable,
    window: Range<usize>,
) -> Result<FeatureVector, FeatureError> {
    if window.start >= window.end || window.end > beats.len() {
        return Err(FeatureError::WindowOutOfBounds {
            start: window.start,
            end: window.end,
            beats: beats.len(),
        });
    }
    let n = window.end - window.start;
    if n < 2 {
        return Err(FeatureError::TooFewBeats { found: n });
    }
    let rr = &beats.rr_s[window.start..window.end - 1];
    let qrs = &beats.qrs_width_s[window.clone()];
    let mean_rr_s = rr.iter().sum::<f64>() / rr.len() as f64;
    let mean_qrs_s = qrs.iter().sum::<f64>() / qrs.len() as f64;
    Ok(FeatureVector { mean_rr_s, mean_qrs_s, hbr_bpm: 60.0 / mean_rr_s })
}

/// Feature triple over the whole beat table.
pub fn record_features(beats: &BeatTable) -> Result<FeatureVector, FeatureError> {
    segment_features(beats, 0..beats.len())
}

/// The VT rule: fast (strictly inside the rate band) and wide
/// (strictly above the QRS threshold).
pub fn rule_label(fv: &FeatureVector, cfg: &RuleConfig) -> RuleVerdict {
    let fast = fv.hbr_bpm > cfg.hbr_low_bpm && fv.hbr_bpm < cfg.hbr_high_bpm;
    let wide = fv.mean_qrs_s > cfg.qrs_wide_s;
    if fast && wide {
        RuleVerdict::Vt
    } else {
        RuleVerdict::NonVt
    }
}

/// Split a beat table into VT episodes.
///
/// Beat `j` (for `j >= 1`) is rule-positive when its instantaneous rate
/// (`60 / rr[j-1]`) and its own QRS width satisfy the rule. Each maximal run
/// of rule-positive beats, together with the beat that anchors its first RR
/// interval, forms a candidate episode; candidates spanning fewer than
/// `min_run_beats` beats are discarded. Episodes lasting at least
/// `sustained_s` are `SustainedVT`, shorter ones `NonSustainedVT`.
pub fn episode_segmentation(
    beats: &BeatTable,
    rule: &RuleConfig,
    cfg: &EpisodeConfig,
) -> Vec<VtEpisode> {
    let n = beats.len();
    let positive: Vec<bool> = (1..n)
        .map(|j| {
            let fv = FeatureVector {
                mean_rr_s: beats.rr_s[j - 1],
                mean_qrs_s: beats.qrs_width_s[j],
                hbr_bpm: 60.0 / beats.rr_s[j - 1],
            };
            rule_label(&fv, rule) == RuleVerdict::Vt
        })
        .collect();

    let mut episodes = Vec::new();
    let mut j = 0;
    while j < positive.len() {
        if !positive[j] {
            j += 1;
            continue;
        }
        let mut k = j;
        while k + 1 < positive.len() && positive[k + 1] {
            k += 1;
        }
        // Beats j+1 ..= k+1 are positive; the anchor is beat j.
        let first_beat = j;
        let last_beat = k + 1;
        let n_beats = last_beat - first_beat + 1;
        if n_beats >= cfg.min_run_beats {
            let start_s = beats.r_times_s[first_beat];
            let end_s = beats.r_times_s[last_beat];
            let label = if end_s - start_s >= cfg.sustained_s {
                ClassLabel::SustainedVT
            } else {
                ClassLabel::NonSustainedVT
            };
            episodes.push(VtEpisode { start_s, end_s, n_beats, label });
        }
        j = k + 1;
    }
    episodes
}

/// Record-level class: the most severe episode present, NonVT when none.
pub fn record_label(episodes: &[VtEpisode]) -> ClassLabel {
    episodes.iter().map(|e| e.label).max().unwrap_or(ClassLabel::NonVT)
}

/// Run detection and the VT rule on a record before and after filtering and
/// report whether the criticality verdict changed.
///
/// Both records must share the sampling rate and length.
pub fn noise_effect_check(
    raw: &EcgRecord,
    filtered: &EcgRecord,
    det: &DetectorConfig,
    rule: &RuleConfig,
) -> Result<NoiseCheckResult, FeatureError> {
    if raw.fs() != filtered.fs() || raw.n_samples() != filtered.n_samples() {
        return Err(FeatureError::MismatchedRecords {
            fs_a: raw.fs(),
            fs_b: filtered.fs(),
            len_a: raw.n_samples(),
            len_b: filtered.n_samples(),
        });
    }
    let fv_before = record_features(&build_beat_table(raw.samples(), raw.fs(), det)?)?;
    let fv_after = record_features(&build_beat_table(filtered.samples(), filtered.fs(), det)?)?;
    let label_before = rule_label(&fv_before, rule);
    let label_after = rule_label(&fv_after, rule);
    Ok(NoiseCheckResult {
        hbr_before_bpm: fv_before.hbr_bpm,
        hbr_after_bpm: fv_after.hbr_bpm,
        label_before,
        label_after,
        criticality_changed: label_before != label_after,
    })
}

// ---------------------------------------------------------------------------
