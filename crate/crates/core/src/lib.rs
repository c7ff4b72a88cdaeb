//! Core library for an ECG ventricular-tachycardia (VT) detection toolkit.
//!
//! The pipeline mirrors a classical rule-plus-learning arrhythmia detector:
//!
//! 1. [`ingest`] — parse minimal WFDB records (formats 212/16) and an internal
//!    CSV record format into [`EcgRecord`].
//! 2. [`synth`] — generate seeded synthetic ECG with known ground truth so the
//!    whole pipeline is testable without clinical data.
//! 3. [`dsp`] — Butterworth bandpass design (biquad cascade) applied
//!    bidirectionally for zero-phase detrending/denoising, plus a sliding
//!    median detrender.
//! 4. [`detect`] — windowed-threshold R-peak detection, Q/S location and
//!    slope-walk QRS width measurement, summarized per beat in [`BeatTable`].
//! 5. [`features`] — RR / QRS-duration / heart-beat-rate features, the
//!    rule-based VT criteria, episode segmentation, and a pre/post-filter
//!    noise effect check.
//! 6. [`classify`] — from-scratch multiclass learners (logistic regression,
//!    CART tree, KNN, linear SVM, small MLP) over the three features.
//! 7. [`eval`] — confusion matrices, precision/sensitivity/specificity/F1,
//!    stratified splits and a multi-model comparison table.
//!
//! All operations are pure and deterministic: identical inputs (including
//! seeds) produce identical outputs, byte-for-byte where text is emitted.

pub mod classify;
pub mod detect;
pub mod dsp;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod synth;

pub use classify::{Dataset, Model, ModelKind, Scaler};
pub use detect::{BeatTable, DetectorConfig};
pub use dsp::{BandpassSpec, BiquadCascade};
pub use eval::{CompareTable, ConfusionMatrix, MetricsReport};
pub use features::{ClassLabel, EpisodeConfig, FeatureVector, RuleConfig, RuleVerdict};
pub use ingest::EcgRecord;
pub use synth::{GroundTruth, SynthSpec};
