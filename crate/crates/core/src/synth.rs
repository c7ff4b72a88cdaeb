//! Seeded synthetic ECG generation with exact ground truth.
//!
//! Beats are sums of five Gaussian bumps (P, Q, R, S, T). The Q/S dips are
//! placed symmetrically around R at a solved offset such that the template's
//! continuous 10%-of-R support equals the requested QRS width after snapping
//! to an odd sample count; the snapped width is what the ground truth
//! records, so downstream width measurements can be compared against an
//! achievable target. Records place beats in continuous time (never snapped
//! to the grid) at intervals of 60/HR for the active segment; episodes
//! override rate and width inside their spans.
//!
//! Noise is an explicit menu — sinusoidal baseline wander, white Gaussian,
//! sinusoidal powerline — all derived deterministically from the seed in
//! [`SynthSpec`], so identical inputs give bit-identical records.
//!
//! A corpus is a labeled set of records drawn per class from fixed parameter
//! ranges. The corpus manifest is CSV with header
//! `record_id,label,episodes`; the `episodes` field is a `;`-separated list
//! of `start-end` second pairs, empty when the record has no episode.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::{rule_label, ClassLabel, FeatureVector, RuleConfig};
use crate::ingest::EcgRecord;

/// Narrowest synthesizable QRS width, seconds.
pub const MIN_QRS_WIDTH_S: f64 = 0.04;
/// Widest synthesizable QRS width, seconds.
pub const MAX_QRS_WIDTH_S: f64 = 0.3;

/// Fraction of the R amplitude that defines the QRS support edges.
const SUPPORT_FRAC: f64 = 0.1;
/// Half-window around R inside which support is measured; the P and T bumps
/// sit outside this window, so they cannot contaminate the edge search.
const SUPPORT_WIN_S: f64 = 0.165;
/// Template extent around the R peak, seconds.
const BEAT_PRE_S: f64 = 0.35;
const BEAT_POST_S: f64 = 0.50;
/// Evaluation window when adding a beat into a record (a safe superset of
/// the template extent).
const PLACE_PRE_S: f64 = 0.45;
const PLACE_POST_S: f64 = 0.60;

const TWO_NEG53: f64 = 1.0 / 9007199254740992.0;

/// Errors from synthesis.
#[derive(Debug, Error)]
pub enum SynthError {
    /// Requested QRS width outside the synthesizable range.
    #[error("invalid qrs width {0} s: must be within [0.04, 0.3]")]
    InvalidWidth(f64),
    /// Two episodes overlap in time.
    #[error("overlapping episodes: episode {first} ends at {end_s} s, episode {second} starts at {start_s} s")]
    OverlappingEpisodes { first: usize, second: usize, end_s: f64, start_s: f64 },
    /// A spec field violates its invariants.
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    /// Class proportions malformed.
    #[error("bad class proportions: {0}")]
    BadProportions(String),
    /// Manifest text does not parse.
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// One override span: rate and QRS width to use between `start_s` and
/// `end_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Episode {
    pub start_s: f64,
    pub end_s: f64,
    pub hr_bpm: f64,
    pub qrs_width_s: f64,
}

/// Additive noise menu; all-zero means a clean record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub baseline_amp_mv: f64,
    pub baseline_freq_hz: f64,
    pub gaussian_sigma_mv: f64,
    pub powerline_amp_mv: f64,
    pub powerline_freq_hz: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            baseline_amp_mv: 0.0,
            baseline_freq_hz: 0.3,
            gaussian_sigma_mv: 0.0,
            powerline_amp_mv: 0.0,
            powerline_freq_hz: 50.0,
        }
    }
}

/// Full description of one synthetic record.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub fs: f64,
    pub duration_s: f64,
    pub base_hr_bpm: f64,
    pub qrs_width_s: f64,
    pub episodes: Vec<Episode>,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl SynthSpec {
    /// Check all structural invariants.
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if !(self.fs >= 100.0 && self.fs.is_finite()) {
            return bad(format!("fs {} must be >= 100 Hz", self.fs));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration {} must be positive", self.duration_s));
        }
        check_rate(self.base_hr_bpm)?;
        check_width(self.qrs_width_s)?;
        for (i, e) in self.episodes.iter().enumerate() {
            check_rate(e.hr_bpm)?;
            check_width(e.qrs_width_s)?;
            if !(e.start_s >= 0.0 && e.start_s < e.end_s && e.end_s <= self.duration_s) {
                return bad(format!(
                    "episode {i} span {}..{} outside [0, {}]",
                    e.start_s, e.end_s, self.duration_s
                ));
            }
        }
        let mut order: Vec<usize> = (0..self.episodes.len()).collect();
        order.sort_by(|&a, &b| {
            self.episodes[a].start_s.total_cmp(&self.episodes[b].start_s)
        });
        for pair in order.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if self.episodes[b].start_s < self.episodes[a].end_s {
                return Err(SynthError::OverlappingEpisodes {
                    first: a,
                    second: b,
                    end_s: self.episodes[a].end_s,
                    start_s: self.episodes[b].start_s,
                });
            }
        }
        let n = &self.noise;
        for (name, v) in [
            ("baseline_amp_mv", n.baseline_amp_mv),
            ("baseline_freq_hz", n.baseline_freq_hz),
            ("gaussian_sigma_mv", n.gaussian_sigma_mv),
            ("powerline_amp_mv", n.powerline_amp_mv),
            ("powerline_freq_hz", n.powerline_freq_hz),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("noise field {name} = {v} must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

fn check_rate(hr: f64) -> Result<(), SynthError> {
    if hr > 20.0 && hr < 400.0 {
        Ok(())
    } else {
        Err(SynthError::InvalidSpec(format!("rate {hr} bpm outside (20, 400)")))
    }
}

fn check_width(w: f64) -> Result<(), SynthError> {
    if (MIN_QRS_WIDTH_S..=MAX_QRS_WIDTH_S).contains(&w) {
        Ok(())
    } else {
        Err(SynthError::InvalidWidth(w))
    }
}

/// The truth behind a synthetic record.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// True R-peak times, strictly increasing, seconds.
    pub r_times_s: Vec<f64>,
    /// Achieved (width-snapped) QRS width of each beat, seconds.
    pub beat_qrs_width_s: Vec<f64>,
    /// Episodes copied from the generating spec (sorted by start).
    pub episodes: Vec<Episode>,
    /// Rhythm class of each episode under the standard rule.
    pub episode_labels: Vec<ClassLabel>,
    /// Record-level class implied by the generating parameters.
    pub intended_class: ClassLabel,
}

// ---------------------------------------------------------------------------
// Beat template
// ---------------------------------------------------------------------------

/// Fixed bump geometry (amplitude, center offset, sigma — all relative to R).
const P_BUMP: (f64, f64, f64) = (0.15, -0.20, 0.035);
const T_BUMP: (f64, f64, f64) = (0.25, 0.28, 0.060);
const R_SIGMA_S: f64 = 0.008;
const DIP_SIGMA_S: f64 = 0.0038;
const DIP_AMP: f64 = 1.5;
const DIP_AMP_NARROW: f64 = 0.6;
const NARROW_WIDTH_S: f64 = 0.055;

/// Solved per-width template parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BeatShape {
    sigma_r: f64,
    sigma_d: f64,
    dip_amp: f64,
    dip_offset_s: f64,
    /// Normalization: the unnormalized template value at t = 0.
    norm: f64,
    /// The snapped width the solver actually achieved.
    width_s: f64,
}

fn gauss(t: f64, mu: f64, sigma: f64) -> f64 {
    let z = (t - mu) / sigma;
    (-0.5 * z * z).exp()
}

/// Unnormalized template value at offset `t` from the R peak.
fn template_raw(t: f64, sigma_r: f64, sigma_d: f64, dip_amp: f64, dip_offset_s: f64) -> f64 {
    gauss(t, 0.0, sigma_r) - dip_amp * gauss(t, -dip_offset_s, sigma_d)
        - dip_amp * gauss(t, dip_offset_s, sigma_d)
        + P_BUMP.0 * gauss(t, P_BUMP.1, P_BUMP.2)
        + T_BUMP.0 * gauss(t, T_BUMP.1, T_BUMP.2)
}

/// Outward distance from R to the last point (on one side) where
/// |template| >= SUPPORT_FRAC x template(0), searched inside SUPPORT_WIN_S.
fn support_edge(sign: f64, sr: f64, sd: f64, ad: f64, d: f64) -> f64 {
    let u0 = template_raw(0.0, sr, sd, ad, d);
    let level = SUPPORT_FRAC * u0;
    let f = |t: f64| template_raw(sign * t, sr, sd, ad, d).abs() - level;
    let (mut lo, mut hi) = (d, SUPPORT_WIN_S);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Total continuous 10%-support of the QRS group for dip offset `d`.
fn support_span(sr: f64, sd: f64, ad: f64, d: f64) -> f64 {
    support_edge(-1.0, sr, sd, ad, d) + support_edge(1.0, sr, sd, ad, d)
}

/// Solve the template parameters so the achieved support equals the
/// requested width snapped to an odd sample count at `fs`.
fn beat_shape(qrs_width_s: f64, fs: f64) -> Result<BeatShape, SynthError> {
    check_width(qrs_width_s)?;
    // Snap to an odd number of samples: edge crossings then land midway
    // between samples, so sampled support stays within one sample of target.
    let half = (qrs_width_s * fs / 2.0).round();
    let width_s = (2.0 * half + 1.0) / fs;

    let sigma_r = R_SIGMA_S.min(width_s / 6.0);
    let sigma_d = DIP_SIGMA_S.min(width_s / 12.0);
    let dip_amp = if width_s < NARROW_WIDTH_S { DIP_AMP_NARROW } else { DIP_AMP };

    let (mut lo, mut hi) = (3.0 * sigma_d, 0.25);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if support_span(sigma_r, sigma_d, dip_amp, mid) < width_s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let dip_offset_s = 0.5 * (lo + hi);
    let norm = template_raw(0.0, sigma_r, sigma_d, dip_amp, dip_offset_s);
    Ok(BeatShape { sigma_r, sigma_d, dip_amp, dip_offset_s, norm, width_s })
}

fn shape_value(t: f64, sh: &BeatShape) -> f64 {
    template_raw(t, sh.sigma_r, sh.sigma_d, sh.dip_amp, sh.dip_offset_s) / sh.norm
}

/// One beat template sampled at `fs`, R peak amplitude exactly 1.0 mV.
///
/// The grid is aligned so one sample falls exactly on the R peak; the
/// template spans about [-0.35, +0.50] s around it. The |value| >= 10% of R
/// support of the QRS group matches `qrs_width_s` to within one sample.
pub fn synth_beat(qrs_width_s: f64, fs: f64) -> Result<Vec<f64>, SynthError> {
    if !(fs >= 100.0 && fs.is_finite()) {
        return Err(SynthError::InvalidSpec(format!("fs {fs} must be >= 100 Hz")));
    }
    let sh = beat_shape(qrs_width_s, fs)?;
    let i_r = (BEAT_PRE_S * fs).round() as i64;
    let i_end = (BEAT_POST_S * fs).round() as i64;
    Ok((-i_r..=i_end).map(|i| shape_value(i as f64 / fs, &sh)).collect())
}

/// Sample index of the R peak inside a [`synth_beat`] template.
pub fn synth_beat_r_index(fs: f64) -> usize {
    (BEAT_PRE_S * fs).round() as usize
}

// ---------------------------------------------------------------------------
// Record synthesis
// ---------------------------------------------------------------------------

/// Deterministic white Gaussian source (Box–Muller over ChaCha8 output).
struct GaussianGen {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianGen {
    fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] so the log is finite; u2 in [0, 1).
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * TWO_NEG53;
        let u2 = (self.rng.next_u64() >> 11) as f64 * TWO_NEG53;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + ((rng.next_u64() >> 11) as f64 * TWO_NEG53) * (hi - lo)
}

/// Per-record sub-seed: a splitmix-style mix of (seed, index) so corpus
/// records are independent yet reproducible.
fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generate one record and its ground truth. Identical `(spec, record_id)`
/// always produce bit-identical output.
pub fn synth_record(spec: &SynthSpec, record_id: &str) -> Result<(EcgRecord, GroundTruth), SynthError> {
    spec.validate()?;
    let fs = spec.fs;
    let base_shape = beat_shape(spec.qrs_width_s, fs)?;
    let mut episodes = spec.episodes.clone();
    episodes.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let episode_shapes: Vec<BeatShape> = episodes
        .iter()
        .map(|e| beat_shape(e.qrs_width_s, fs))
        .collect::<Result<_, _>>()?;

    // Place beats in continuous time; each beat uses the rate/width of the
    // segment containing it.
    let mut beat_times = Vec::new();
    let mut beat_shape_idx = Vec::new(); // usize::MAX marks the base shape
    let mut t = 0.5 * 60.0 / spec.base_hr_bpm;
    while t < spec.duration_s - PLACE_PRE_S {
        let seg = episodes.iter().position(|e| e.start_s <= t && t < e.end_s);
        let hr = seg.map_or(spec.base_hr_bpm, |i| episodes[i].hr_bpm);
        beat_times.push(t);
        beat_shape_idx.push(seg.unwrap_or(usize::MAX));
        t += 60.0 / hr;
    }

    let n = (spec.duration_s * fs).round() as usize;
    let mut x = vec![0.0f64; n];
    for (&t_b, &si) in beat_times.iter().zip(&beat_shape_idx) {
        let sh = if si == usize::MAX { &base_shape } else { &episode_shapes[si] };
        let i0 = ((t_b - PLACE_PRE_S) * fs).ceil().max(0.0) as usize;
        let i1 = (((t_b + PLACE_POST_S) * fs).floor() as usize).min(n.saturating_sub(1));
        for i in i0..=i1.min(n - 1) {
            x[i] += shape_value(i as f64 / fs - t_b, sh);
        }
    }

    apply_noise_in_place(&mut x, fs, &spec.noise, spec.seed);

    let beat_qrs_width_s: Vec<f64> = beat_shape_idx
        .iter()
        .map(|&si| if si == usize::MAX { base_shape.width_s } else { episode_shapes[si].width_s })
        .collect();
    let rule = RuleConfig::default();
    let episode_labels: Vec<ClassLabel> = episodes
        .iter()
        .zip(&episode_shapes)
        .map(|(e, sh)| {
            let fv = FeatureVector {
                mean_rr_s: 60.0 / e.hr_bpm,
                mean_qrs_s: sh.width_s,
                hbr_bpm: e.hr_bpm,
            };
            match rule_label(&fv, &rule) {
                crate::features::RuleVerdict::NonVt => ClassLabel::NonVT,
                crate::features::RuleVerdict::Vt => {
                    if e.end_s - e.start_s >= 30.0 {
                        ClassLabel::SustainedVT
                    } else {
                        ClassLabel::NonSustainedVT
                    }
                }
            }
        })
        .collect();
    let intended_class =
        episode_labels.iter().copied().max().unwrap_or(ClassLabel::NonVT);

    let record = EcgRecord::new(record_id.to_string(), fs, x)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let truth = GroundTruth {
        r_times_s: beat_times,
        beat_qrs_width_s,
        episodes,
        episode_labels,
        intended_class,
    };
    Ok((record, truth))
}

fn apply_noise_in_place(x: &mut [f64], fs: f64, noise: &NoiseSpec, seed: u64) {
    let two_pi = 2.0 * std::f64::consts::PI;
    if noise.baseline_amp_mv > 0.0 {
        for (i, v) in x.iter_mut().enumerate() {
            *v += noise.baseline_amp_mv * (two_pi * noise.baseline_freq_hz * i as f64 / fs).sin();
        }
    }
    if noise.powerline_amp_mv > 0.0 {
        for (i, v) in x.iter_mut().enumerate() {
            *v += noise.powerline_amp_mv * (two_pi * noise.powerline_freq_hz * i as f64 / fs).sin();
        }
    }
    if noise.gaussian_sigma_mv > 0.0 {
        let mut g = GaussianGen::new(seed);
        for v in x.iter_mut() {
            *v += noise.gaussian_sigma_mv * g.next();
        }
    }
}

/// Copy a record with the given noise menu added (seeded, deterministic).
pub fn add_noise(rec: &EcgRecord, noise: &NoiseSpec, seed: u64) -> EcgRecord {
    let mut x = rec.samples().to_vec();
    apply_noise_in_place(&mut x, rec.fs(), noise, seed);
    EcgRecord::new(rec.record_id().to_string(), rec.fs(), x)
        .expect("adding finite noise keeps a valid record")
}

/// Copy a record with white Gaussian noise at the given SNR (dB), where
/// signal power is the clean record's mean square.
pub fn add_gaussian_snr(rec: &EcgRecord, snr_db: f64, seed: u64) -> EcgRecord {
    let x = rec.samples();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    let sigma = rms / 10f64.powf(snr_db / 20.0);
    let noise = NoiseSpec { gaussian_sigma_mv: sigma, ..NoiseSpec::default() };
    add_noise(rec, &noise, seed)
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

/// Class proportions for corpus generation; must be non-negative and sum
/// to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMix {
    pub non_vt: f64,
    pub sustained_vt: f64,
    pub non_sustained_vt: f64,
}

impl Default for ClassMix {
    fn default() -> Self {
        Self { non_vt: 1.0 / 3.0, sustained_vt: 1.0 / 3.0, non_sustained_vt: 1.0 / 3.0 }
    }
}

/// Corpus sampling rate, Hz.
pub const CORPUS_FS_HZ: f64 = 250.0;

/// Per-class record counts by largest-remainder apportionment (ties to the
/// earlier class in [NonVT, SustainedVT, NonSustainedVT] order).
fn class_counts(n: usize, mix: &ClassMix) -> Result<[usize; 3], SynthError> {
    let p = [mix.non_vt, mix.sustained_vt, mix.non_sustained_vt];
    if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(SynthError::BadProportions(format!("negative or non-finite: {p:?}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SynthError::BadProportions(format!("sum {sum} != 1")));
    }
    let exact: Vec<f64> = p.iter().map(|v| v * n as f64).collect();
    let mut counts: [usize; 3] = [0; 3];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = e.floor() as usize;
    }
    let mut rem = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in &order {
        if rem == 0 {
            break;
        }
        counts[i] += 1;
        rem -= 1;
    }
    Ok(counts)
}

/// Draw the generating spec for one record of the given class.
fn class_spec(class: ClassLabel, rng: &mut ChaCha8Rng, seed: u64) -> SynthSpec {
    let base_hr_bpm = uniform_in(rng, 60.0, 100.0);
    let qrs_width_s = uniform_in(rng, 0.06, 0.092);
    let (duration_s, episodes) = match class {
        ClassLabel::NonVT => (30.0, Vec::new()),
        ClassLabel::SustainedVT => (
            40.0,
            vec![Episode {
                start_s: 2.0,
                end_s: 38.0,
                hr_bpm: uniform_in(rng, 160.0, 220.0),
                qrs_width_s: uniform_in(rng, 0.14, 0.17),
            }],
        ),
        ClassLabel::NonSustainedVT => (
            30.0,
            vec![Episode {
                start_s: 10.0,
                end_s: 20.0,
                hr_bpm: uniform_in(rng, 125.0, 145.0),
                qrs_width_s: uniform_in(rng, 0.15, 0.17),
            }],
        ),
    };
    SynthSpec {
        fs: CORPUS_FS_HZ,
        duration_s,
        base_hr_bpm,
        qrs_width_s,
        episodes,
        noise: NoiseSpec::default(),
        seed,
    }
}

/// Generate a labeled corpus of clean records: `n_records` split across the
/// classes by `mix`, grouped by class in [NonVT, SustainedVT,
/// NonSustainedVT] order. Record ids are `rec000`, `rec001`, ...
///
/// Records carry no noise; add it afterwards with [`add_noise`] or
/// [`add_gaussian_snr`] so the same corpus can be studied at several noise
/// levels.
pub fn synth_corpus(
    n_records: usize,
    mix: &ClassMix,
    seed: u64,
) -> Result<Vec<(EcgRecord, GroundTruth)>, SynthError> {
    let counts = class_counts(n_records, mix)?;
    let classes = [ClassLabel::NonVT, ClassLabel::SustainedVT, ClassLabel::NonSustainedVT];
    let mut out = Vec::with_capacity(n_records);
    let mut index: u64 = 0;
    for (&class, &count) in classes.iter().zip(&counts) {
        for _ in 0..count {
            let record_seed = sub_seed(seed, index);
            let mut rng = ChaCha8Rng::seed_from_u64(record_seed);
            let spec = class_spec(class, &mut rng, record_seed);
            let id = format!("rec{index:03}");
            out.push(synth_record(&spec, &id)?);
            index += 1;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Ground-truth matching
// ---------------------------------------------------------------------------

/// Counts from matching detected peaks against true R times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchStats {
    pub n_true: usize,
    pub n_detected: usize,
    pub n_matched: usize,
}

impl MatchStats {
    /// Matched fraction of true beats (0 when there are none).
    pub fn sensitivity(&self) -> f64 {
        if self.n_true == 0 { 0.0 } else { self.n_matched as f64 / self.n_true as f64 }
    }

    /// Matched fraction of detected beats (0 when there are none).
    pub fn precision(&self) -> f64 {
        if self.n_detected == 0 { 0.0 } else { self.n_matched as f64 / self.n_detected as f64 }
    }
}

/// One-to-one matching of detected peak indices to true R times within
/// `tol_samples`. Both inputs must be sorted ascending.
pub fn match_r_peaks(
    true_times_s: &[f64],
    detected_indices: &[usize],
    fs: f64,
    tol_samples: usize,
) -> MatchStats {
    let truth: Vec<i64> = true_times_s.iter().map(|t| (t * fs).round() as i64).collect();
    let det: Vec<i64> = detected_indices.iter().map(|&i| i as i64).collect();
    let (mut i, mut j, mut matched) = (0usize, 0usize, 0usize);
    while i < truth.len() && j < det.len() {
        let d = det[j] - truth[i];
        if d.unsigned_abs() as usize <= tol_samples {
            matched += 1;
            i += 1;
            j += 1;
        } else if det[j] < truth[i] {
            j += 1;
        } else {
            i += 1;
        }
    }
    MatchStats { n_true: truth.len(), n_detected: det.len(), n_matched: matched }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// One corpus manifest row.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub record_id: String,
    pub label: ClassLabel,
    /// Episode spans as (start_s, end_s) pairs.
    pub episodes: Vec<(f64, f64)>,
}

/// Manifest CSV header.
pub const MANIFEST_HEADER: &str = "record_id,label,episodes";

/// Render one manifest row: `id,label,start-end;start-end` (episodes field
/// empty when there are none).
pub fn manifest_line(record_id: &str, truth: &GroundTruth) -> String {
    let eps = truth
        .episodes
        .iter()
        .map(|e| format!("{}-{}", e.start_s, e.end_s))
        .collect::<Vec<_>>()
        .join(";");
    format!("{},{},{}", record_id, truth.intended_class, eps)
}

/// Parse manifest text (header line required).
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, SynthError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == MANIFEST_HEADER => {}
        other => {
            return Err(SynthError::MalformedManifest(format!(
                "expected header {MANIFEST_HEADER:?}, got {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        let (id, label, eps) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(SynthError::MalformedManifest(format!(
                    "line {}: expected 3 comma-separated fields: {line:?}",
                    lineno + 2
                )))
            }
        };
        let label: ClassLabel = label
            .parse()
            .map_err(|e| SynthError::MalformedManifest(format!("line {}: {e}", lineno + 2)))?;
        let mut episodes = Vec::new();
        if !eps.is_empty() {
            for span in eps.split(';') {
                let (a, b) = span.split_once('-').ok_or_else(|| {
                    SynthError::MalformedManifest(format!(
                        "line {}: bad span {span:?}",
                        lineno + 2
                    ))
                })?;
                let parse = |s: &str| {
                    s.parse::<f64>().map_err(|_| {
                        SynthError::MalformedManifest(format!(
                            "line {}: bad number {s:?}",
                            lineno + 2
                        ))
                    })
                };
                episodes.push((parse(a)?, parse(b)?));
            }
        }
        out.push(ManifestEntry { record_id: id.to_string(), label, episodes });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{detect_r_peaks, DetectorConfig};

    fn clean_spec() -> SynthSpec {
        SynthSpec {
            fs: 250.0,
            duration_s: 10.0,
            base_hr_bpm: 60.0,
            qrs_width_s: 0.08,
            episodes: Vec::new(),
            noise: NoiseSpec::default(),
            seed: 7,
        }
    }

    /// Sampled 10%-support span of a template, measured inside the central
    /// window so the P and T bumps stay out of the way.
    fn measured_support_s(template: &[f64], fs: f64) -> f64 {
        let r = synth_beat_r_index(fs);
        let peak = template[r];
        let level = SUPPORT_FRAC * peak;
        let win = (SUPPORT_WIN_S * fs).floor() as usize;
        let (mut first, mut last) = (r, r);
        for i in r.saturating_sub(win)..=(r + win).min(template.len() - 1) {
            if template[i].abs() >= level {
                first = first.min(i);
                last = last.max(i);
            }
        }
        (last - first) as f64 / fs
    }

    #[test]
    fn beat_peak_is_exactly_one_at_r() {
        for q in [0.05, 0.08, 0.14, 0.17] {
            let t = synth_beat(q, 250.0).unwrap();
            let r = synth_beat_r_index(250.0);
            assert_eq!(t[r], 1.0, "normalization fixes the R sample at 1.0");
            let max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(max, 1.0, "R is the template maximum (q = {q})");
        }
    }

    #[test]
    fn beat_support_tracks_requested_width() {
        for (q, fs) in [(0.08, 250.0), (0.08, 360.0), (0.06, 250.0), (0.15, 250.0), (0.16, 360.0)]
        {
            let t = synth_beat(q, fs).unwrap();
            let span = measured_support_s(&t, fs);
            assert!(
                (span - q).abs() <= 1.0 / fs + 1e-9,
                "q = {q} at fs {fs}: measured support {span}"
            );
        }
    }

    #[test]
    fn beat_rejects_out_of_range_widths() {
        assert!(matches!(synth_beat(0.03, 250.0), Err(SynthError::InvalidWidth(_))));
        assert!(matches!(synth_beat(0.35, 250.0), Err(SynthError::InvalidWidth(_))));
    }

    #[test]
    fn beat_has_negative_dips_flanking_r() {
        let t = synth_beat(0.1, 250.0).unwrap();
        let r = synth_beat_r_index(250.0);
        let min_left = t[r.saturating_sub(20)..r].iter().copied().fold(f64::INFINITY, f64::min);
        let min_right = t[r + 1..r + 21].iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min_left < -0.1, "Q dip missing: {min_left}");
        assert!(min_right < -0.1, "S dip missing: {min_right}");
    }

    #[test]
    fn record_places_beats_at_rate() {
        let (rec, gt) = synth_record(&clean_spec(), "r0").unwrap();
        assert_eq!(rec.fs(), 250.0);
        assert_eq!(gt.r_times_s.len(), 10, "60 bpm for 10 s places 10 beats");
        for pair in gt.r_times_s.windows(2) {
            assert!((pair[1] - pair[0] - 1.0).abs() < 1e-12);
        }
        assert_eq!(gt.intended_class, ClassLabel::NonVT);
    }

    #[test]
    fn ground_truth_rate_reproduces_spec_rate() {
        for hr in [55.0, 72.0, 100.0, 180.0] {
            let spec = SynthSpec { base_hr_bpm: hr, duration_s: 30.0, ..clean_spec() };
            let (_, gt) = synth_record(&spec, "r").unwrap();
            let rr: Vec<f64> = gt.r_times_s.windows(2).map(|w| w[1] - w[0]).collect();
            let hbr = 60.0 / (rr.iter().sum::<f64>() / rr.len() as f64);
            assert!((hbr - hr).abs() <= 1.0, "spec {hr} bpm, ground truth {hbr}");
        }
    }

    #[test]
    fn short_fast_wide_episode_is_vt_by_rule() {
        let spec = SynthSpec {
            episodes: vec![Episode { start_s: 2.0, end_s: 8.0, hr_bpm: 180.0, qrs_width_s: 0.14 }],
            ..clean_spec()
        };
        let (_, gt) = synth_record(&spec, "r").unwrap();
        assert_eq!(gt.episode_labels, vec![ClassLabel::NonSustainedVT]);
        assert_eq!(gt.intended_class, ClassLabel::NonSustainedVT);
        let episode_beats =
            gt.r_times_s.iter().filter(|&&t| (2.0..8.0).contains(&t)).count();
        assert!(episode_beats >= 10, "180 bpm over 6 s: got {episode_beats}");
    }

    #[test]
    fn identical_specs_are_bit_identical() {
        let spec = SynthSpec {
            noise: NoiseSpec {
                baseline_amp_mv: 0.2,
                gaussian_sigma_mv: 0.05,
                powerline_amp_mv: 0.05,
                ..NoiseSpec::default()
            },
            ..clean_spec()
        };
        let (a, _) = synth_record(&spec, "r").unwrap();
        let (b, _) = synth_record(&spec, "r").unwrap();
        assert_eq!(a.samples(), b.samples());
    }

    #[test]
    fn different_seeds_differ_with_noise() {
        let noise = NoiseSpec { gaussian_sigma_mv: 0.05, ..NoiseSpec::default() };
        let (a, _) =
            synth_record(&SynthSpec { noise, seed: 1, ..clean_spec() }, "r").unwrap();
        let (b, _) =
            synth_record(&SynthSpec { noise, seed: 2, ..clean_spec() }, "r").unwrap();
        assert_ne!(a.samples(), b.samples());
    }

    #[test]
    fn overlapping_episodes_rejected() {
        let spec = SynthSpec {
            duration_s: 30.0,
            episodes: vec![
                Episode { start_s: 2.0, end_s: 10.0, hr_bpm: 180.0, qrs_width_s: 0.15 },
                Episode { start_s: 8.0, end_s: 15.0, hr_bpm: 180.0, qrs_width_s: 0.15 },
            ],
            ..clean_spec()
        };
        assert!(matches!(
            synth_record(&spec, "r"),
            Err(SynthError::OverlappingEpisodes { .. })
        ));
    }

    #[test]
    fn spec_bounds_are_enforced() {
        assert!(matches!(
            SynthSpec { fs: 80.0, ..clean_spec() }.validate(),
            Err(SynthError::InvalidSpec(_))
        ));
        assert!(matches!(
            SynthSpec { base_hr_bpm: 400.0, ..clean_spec() }.validate(),
            Err(SynthError::InvalidSpec(_))
        ));
        assert!(matches!(
            SynthSpec { qrs_width_s: 0.01, ..clean_spec() }.validate(),
            Err(SynthError::InvalidWidth(_))
        ));
    }

    #[test]
    fn clean_records_are_fully_detectable() {
        // Every true R peak recovered within two samples on clean records.
        for (hr, q, episodes) in [
            (70.0, 0.08, Vec::new()),
            (90.0, 0.09, vec![Episode {
                start_s: 5.0,
                end_s: 20.0,
                hr_bpm: 190.0,
                qrs_width_s: 0.16,
            }]),
        ] {
            let spec = SynthSpec {
                duration_s: 30.0,
                base_hr_bpm: hr,
                qrs_width_s: q,
                episodes,
                ..clean_spec()
            };
            let (rec, gt) = synth_record(&spec, "r").unwrap();
            let peaks = detect_r_peaks(rec.samples(), rec.fs(), &DetectorConfig::default())
                .unwrap();
            let stats = match_r_peaks(&gt.r_times_s, &peaks, rec.fs(), 2);
            assert_eq!(stats.n_matched, stats.n_true, "missed beats: {stats:?}");
            assert_eq!(stats.n_matched, stats.n_detected, "spurious peaks: {stats:?}");
        }
    }

    #[test]
    fn corpus_counts_follow_mix() {
        let mix = ClassMix::default();
        let corpus = synth_corpus(9, &mix, 42).unwrap();
        assert_eq!(corpus.len(), 9);
        let mut counts = [0usize; 3];
        for (_, gt) in &corpus {
            match gt.intended_class {
                ClassLabel::NonVT => counts[0] += 1,
                ClassLabel::SustainedVT => counts[1] += 1,
                ClassLabel::NonSustainedVT => counts[2] += 1,
            }
        }
        assert_eq!(counts, [3, 3, 3]);
    }

    #[test]
    fn pure_mix_yields_one_class() {
        let mix = ClassMix { non_vt: 1.0, sustained_vt: 0.0, non_sustained_vt: 0.0 };
        let corpus = synth_corpus(10, &mix, 3).unwrap();
        assert_eq!(corpus.len(), 10);
        for (_, gt) in &corpus {
            assert_eq!(gt.intended_class, ClassLabel::NonVT);
            assert!(gt.episodes.is_empty());
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let a = synth_corpus(6, &ClassMix::default(), 99).unwrap();
        let b = synth_corpus(6, &ClassMix::default(), 99).unwrap();
        for ((ra, _), (rb, _)) in a.iter().zip(&b) {
            assert_eq!(ra.samples(), rb.samples());
            assert_eq!(ra.record_id(), rb.record_id());
        }
    }

    #[test]
    fn bad_proportions_rejected() {
        let mix = ClassMix { non_vt: 0.5, sustained_vt: 0.2, non_sustained_vt: 0.2 };
        assert!(matches!(synth_corpus(5, &mix, 1), Err(SynthError::BadProportions(_))));
        let neg = ClassMix { non_vt: -0.5, sustained_vt: 1.0, non_sustained_vt: 0.5 };
        assert!(matches!(synth_corpus(5, &neg, 1), Err(SynthError::BadProportions(_))));
    }

    #[test]
    fn snr_helper_hits_requested_power_ratio() {
        let spec = SynthSpec { duration_s: 30.0, ..clean_spec() };
        let (clean, _) = synth_record(&spec, "r").unwrap();
        let noisy = add_gaussian_snr(&clean, 10.0, 5);
        let pw = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        let noise: Vec<f64> =
            noisy.samples().iter().zip(clean.samples()).map(|(a, b)| a - b).collect();
        let snr_db = 10.0 * (pw(clean.samples()) / pw(&noise)).log10();
        assert!((snr_db - 10.0).abs() < 0.5, "achieved SNR {snr_db} dB");
    }

    #[test]
    fn manifest_round_trips() {
        let corpus = synth_corpus(6, &ClassMix::default(), 11).unwrap();
        let mut text = String::from(MANIFEST_HEADER);
        for (rec, gt) in &corpus {
            text.push('\n');
            text.push_str(&manifest_line(rec.record_id(), gt));
        }
        let entries = parse_manifest(&text).unwrap();
        assert_eq!(entries.len(), 6);
        for (entry, (rec, gt)) in entries.iter().zip(&corpus) {
            assert_eq!(entry.record_id, rec.record_id());
            assert_eq!(entry.label, gt.intended_class);
            assert_eq!(entry.episodes.len(), gt.episodes.len());
            for (span, ep) in entry.episodes.iter().zip(&gt.episodes) {
                assert_eq!(span.0, ep.start_s);
                assert_eq!(span.1, ep.end_s);
            }
        }
        assert!(parse_manifest("nope\n").is_err());
        assert!(parse_manifest("record_id,label,episodes\nx,Bogus,\n").is_err());
    }

    #[test]
    fn match_stats_score_partial_overlap() {
        // Truth at samples 100, 200, 300; detections at 101, 205, 301, 400.
        let stats = match_r_peaks(&[1.0, 2.0, 3.0], &[101, 205, 301, 400], 100.0, 2);
        assert_eq!(stats.n_matched, 2, "205 is 5 samples off, 400 unmatched");
        assert!((stats.sensitivity() - 2.0 / 3.0).abs() < 1e-12);
        assert!((stats.precision() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sub_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..1000 {
            assert!(seen.insert(sub_seed(42, i)), "collision at index {i}");
        }
    }
}
