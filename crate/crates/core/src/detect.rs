//! R-peak detection and QRS delineation.
//!
//! Detection follows a windowed-threshold scheme: the signal is cut into
//! consecutive windows of an assumed RR length, the per-window maxima are
//! averaged into a global threshold, and contiguous above-threshold runs
//! collapse to one peak each, subject to a refractory interval.
//!
//! Q and S are the signal minima in short windows on either side of each R;
//! QRS onset/offset are found by walking outward from Q/S while the absolute
//! first difference stays above a fraction of the steepest in-complex slope.

use thiserror::Error;

/// Hard limit on the onset/offset slope walk, seconds per side.
const WALK_CAP_S: f64 = 0.060;

/// Errors from peak detection and beat-table construction.
#[derive(Debug, Error)]
pub enum DetectError {
    /// Signal shorter than one detection window.
    #[error("signal too short: {len} samples < one window of {window}")]
    SignalTooShort { len: usize, window: usize },
    /// No window maxima to average.
    #[error("empty input")]
    EmptyInput,
    /// Fewer than two usable beats; RR intervals undefined.
    #[error("too few beats: found {found}, need >= 2")]
    TooFewBeats { found: usize },
    /// Detector configuration violates its invariants.
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
}

/// Tunables for the detector. Defaults reproduce the standard pipeline:
/// 0.6 s windows, threshold at 0.75x the mean window maximum, 200 ms
/// refractory, 80 ms Q/S search, 5% slope fraction for onset/offset.
///
/// `threshold_coef = 1.0` reproduces the plain averaged-maxima threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Assumed RR interval; sets the analysis window length.
    pub t_rr_assumed_s: f64,
    /// Multiplier on the mean window maximum.
    pub threshold_coef: f64,
    /// Minimum spacing between accepted peaks.
    pub refractory_s: f64,
    /// Half-width of the Q/S argmin search around R.
    pub qs_search_s: f64,
    /// Slope fraction that terminates the onset/offset walk.
    pub onset_slope_frac: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            t_rr_assumed_s: 0.6,
            threshold_coef: 0.75,
            refractory_s: 0.2,
            qs_search_s: 0.08,
            onset_slope_frac: 0.05,
        }
    }
}

impl DetectorConfig {
    fn validate(&self) -> Result<(), DetectError> {
        let c = |ok: bool, msg: &str| {
            if ok { Ok(()) } else { Err(DetectError::InvalidConfig(msg.into())) }
        };
        c(
            (0.2..=2.0).contains(&self.t_rr_assumed_s),
            "t_rr_assumed_s must be within [0.2, 2]",
        )?;
        c(
            self.threshold_coef > 0.0 && self.threshold_coef <= 1.5,
            "threshold_coef must be in (0, 1.5]",
        )?;
        c(
            self.refractory_s > 0.0 && self.refractory_s < self.t_rr_assumed_s,
            "refractory_s must be in (0, t_rr_assumed_s)",
        )?;
        c(self.qs_search_s > 0.0, "qs_search_s must be positive")?;
        c(
            self.onset_slope_frac > 0.0 && self.onset_slope_frac < 1.0,
            "onset_slope_frac must be in (0, 1)",
        )
    }

    fn window_len(&self, fs: f64) -> usize {
        ((self.t_rr_assumed_s * fs).round() as usize).max(1)
    }
}

/// Per-beat annotations for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatTable {
    /// Sample index of each R peak, strictly increasing.
    pub r_indices: Vec<usize>,
    /// R times in seconds (`index / fs`).
    pub r_times_s: Vec<f64>,
    /// Q (pre-R minimum) sample indices, one per beat.
    pub q_indices: Vec<usize>,
    /// S (post-R minimum) sample indices, one per beat.
    pub s_indices: Vec<usize>,
    /// QRS onset times, seconds.
    pub qrs_onset_s: Vec<f64>,
    /// QRS offset times, seconds.
    pub qrs_offset_s: Vec<f64>,
    /// Successive RR intervals, seconds; `len = beats - 1`.
    pub rr_s: Vec<f64>,
    /// Measured QRS width per beat, seconds.
    pub qrs_width_s: Vec<f64>,
}

impl BeatTable {
    /// Number of beats.
    pub fn len(&self) -> usize {
        self.r_indices.len()
    }

    /// True when the table holds no beats.
    pub fn is_empty(&self) -> bool {
        self.r_indices.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

/// Maxima of consecutive non-overlapping windows of the assumed RR length.
///
/// A final partial window is kept as its own window when it is at least half
/// a window long, otherwise it is merged into the previous window.
pub fn window_maxima(x: &[f64], fs: f64, cfg: &DetectorConfig) -> Result<Vec<f64>, DetectError> {
    cfg.validate()?;
    let w = cfg.window_len(fs);
    if x.len() < w {
        return Err(DetectError::SignalTooShort { len: x.len(), window: w });
    }
    let n_full = x.len() / w;
    let rem = x.len() - n_full * w;
    let mut bounds: Vec<(usize, usize)> = (0..n_full).map(|i| (i * w, (i + 1) * w)).collect();
    if rem > 0 {
        if 2 * rem >= w {
            bounds.push((n_full * w, x.len()));
        } else if let Some(last) = bounds.last_mut() {
            last.1 = x.len();
        }
    }
    Ok(bounds
        .into_iter()
        .map(|(a, b)| x[a..b].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Threshold = `threshold_coef` x arithmetic mean of the window maxima.
pub fn compute_threshold(maxima: &[f64], cfg: &DetectorConfig) -> Result<f64, DetectError> {
    cfg.validate()?;
    if maxima.is_empty() {
        return Err(DetectError::EmptyInput);
    }
    Ok(cfg.threshold_coef * maxima.iter().sum::<f64>() / maxima.len() as f64)
}

/// Detect R peaks: collapse each contiguous run of samples strictly above the
/// threshold to the run's maximum (earliest index on ties), then enforce the
/// refractory interval greedily, keeping the larger of two close peaks.
///
/// Returns sorted indices; an empty result (no sample above threshold) is not
/// an error.
pub fn detect_r_peaks(x: &[f64], fs: f64, cfg: &DetectorConfig) -> Result<Vec<usize>, DetectError> {
    let maxima = window_maxima(x, fs, cfg)?;
    let th = compute_threshold(&maxima, cfg)?;

    let mut peaks = Vec::new();
    let mut i = 0;
    while i < x.len() {
        if x[i] > th {
            let mut best = i;
            let mut j = i;
            while j + 1 < x.len() && x[j + 1] > th {
                j += 1;
                if x[j] > x[best] {
                    best = j;
                }
            }
            peaks.push(best);
            i = j + 1;
        } else {
            i += 1;
        }
    }

    let refr = (cfg.refractory_s * fs).round() as usize;
    let mut kept: Vec<usize> = Vec::with_capacity(peaks.len());
    for p in peaks {
        match kept.last().copied() {
            Some(prev) if p - prev < refr => {
                if x[p] > x[prev] {
                    *kept.last_mut().unwrap() = p;
                }
            }
            _ => kept.push(p),
        }
    }
    Ok(kept)
}

/// Locate Q and S as the windowed minima on either side of an R peak.
///
/// Q searches `[r - qs_search, r)`, S searches `(r, r + qs_search]`; both
/// windows clamp at the signal bounds, and exact-value ties resolve to the
/// index closest to R. Degenerate windows (R at a signal edge) return `r`.
pub fn locate_qs(x: &[f64], fs: f64, r_index: usize, cfg: &DetectorConfig) -> (usize, usize) {
    let w = ((cfg.qs_search_s * fs).round() as usize).max(1);

    let q_lo = r_index.saturating_sub(w);
    let mut q = r_index;
    if r_index > q_lo {
        let mut best = q_lo;
        for i in q_lo..r_index {
            if x[i] <= x[best] {
                best = i; // `<=` prefers the later index: ties go toward R
            }
        }
        q = best;
    }

    let s_hi = (r_index + w + 1).min(x.len());
    let mut s = r_index;
    if r_index + 1 < s_hi {
        let mut best = r_index + 1;
        for i in r_index + 1..s_hi {
            if x[i] < x[best] {
                best = i; // strict `<` keeps the earlier index: ties go toward R
            }
        }
        s = best;
    }

    (q, s)
}

/// Measure QRS width by the slope walk (see [`qrs_bounds`]), in seconds.
pub fn qrs_width(x: &[f64], fs: f64, q_index: usize, s_index: usize, cfg: &DetectorConfig) -> f64 {
    let (onset, offset) = qrs_bounds(x, fs, q_index, s_index, cfg);
    (offset - onset) as f64 / fs
}

/// Walk outward from Q and S to the QRS onset/offset sample indices.
///
/// The walk threshold is `onset_slope_frac` x the largest absolute first
/// difference inside `[q, s]`; each walk is capped at 60 ms. A flat signal
/// outside `[q, s]` halts the walk immediately.
pub fn qrs_bounds(
    x: &[f64],
    fs: f64,
    q_index: usize,
    s_index: usize,
    cfg: &DetectorConfig,
) -> (usize, usize) {
    if s_index <= q_index {
        return (q_index, q_index);
    }
    let mut steepest = 0.0f64;
    for i in q_index..s_index.min(x.len() - 1) {
        steepest = steepest.max((x[i + 1] - x[i]).abs());
    }
    let th = cfg.onset_slope_frac * steepest;
    let cap = (WALK_CAP_S * fs).round() as usize;

    let mut onset = q_index;
    while onset > 0 && q_index - onset < cap && (x[onset] - x[onset - 1]).abs() >= th {
        onset -= 1;
    }
    let mut offset = s_index;
    while offset + 1 < x.len() && offset - s_index < cap && (x[offset + 1] - x[offset]).abs() >= th
    {
        offset += 1;
    }
    (onset, offset)
}

/// Detect peaks and assemble the full per-beat table.
///
/// Peaks falling on the first or last sample are dropped (their Q/S windows
/// are empty on one side, so no delineation is possible).
pub fn build_beat_table(x: &[f64], fs: f64, cfg: &DetectorConfig) -> Result<BeatTable, DetectError> {
    let peaks: Vec<usize> = detect_r_peaks(x, fs, cfg)?
        .into_iter()
        .filter(|&r| r > 0 && r + 1 < x.len())
        .collect();
    if peaks.len() < 2 {
        return Err(DetectError::TooFewBeats { found: peaks.len() });
    }

    let n = peaks.len();
    let mut table = BeatTable {
        r_indices: Vec::with_capacity(n),
        r_times_s: Vec::with_capacity(n),
        q_indices: Vec::with_capacity(n),
        s_indices: Vec::with_capacity(n),
        qrs_onset_s: Vec::with_capacity(n),
        qrs_offset_s: Vec::with_capacity(n),
        rr_s: Vec::with_capacity(n - 1),
        qrs_width_s: Vec::with_capacity(n),
    };
    for &r in &peaks {
        let (q, s) = locate_qs(x, fs, r, cfg);
        let (onset, offset) = qrs_bounds(x, fs, q, s, cfg);
        table.r_indices.push(r);
        table.r_times_s.push(r as f64 / fs);
        table.q_indices.push(q);
        table.s_indices.push(s);
        table.qrs_onset_s.push(onset as f64 / fs);
        table.qrs_offset_s.push(offset as f64 / fs);
        table.qrs_width_s.push((offset - onset) as f64 / fs);
    }
    for w in table.r_times_s.windows(2) {
        table.rr_s.push(w[1] - w[0]);
    }
    Ok(table)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> DetectorConfig {
        DetectorConfig::default()
    }

    /// Brute-force reference: every strict local maximum above the threshold
    /// (leftmost sample of a plateau), then the same greedy refractory rule.
    /// Equivalent to the run-collapsing detector whenever each
    /// above-threshold run is unimodal, which holds for beat-like signals.
    fn oracle_peaks(x: &[f64], fs: f64, cfg: &DetectorConfig) -> Vec<usize> {
        let maxima = window_maxima(x, fs, cfg).unwrap();
        let th = compute_threshold(&maxima, cfg).unwrap();
        let mut cands = Vec::new();
        for i in 0..x.len() {
            if x[i] <= th {
                continue;
            }
            let mut l = i;
            while l > 0 && x[l - 1] == x[i] {
                l -= 1;
            }
            if l != i {
                continue; // not the leftmost sample of its plateau
            }
            let rising = l == 0 || x[l - 1] < x[i];
            let mut r = i;
            while r + 1 < x.len() && x[r + 1] == x[i] {
                r += 1;
            }
            let falling = r + 1 == x.len() || x[r + 1] < x[i];
            if rising && falling {
                cands.push(i);
            }
        }
        let refr = (cfg.refractory_s * fs).round() as usize;
        let mut kept: Vec<usize> = Vec::new();
        for p in cands {
            match kept.last().copied() {
                Some(prev) if p - prev < refr => {
                    if x[p] > x[prev] {
                        *kept.last_mut().unwrap() = p;
                    }
                }
                _ => kept.push(p),
            }
        }
        kept
    }

    /// A crude beat train: triangular spikes of the given amplitudes, one per
    /// second at fs = 100, baseline 0.
    fn spike_train(amps: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; amps.len() * 100];
        for (k, &a) in amps.iter().enumerate() {
            let c = k * 100 + 50;
            x[c - 1] = 0.6 * a;
            x[c] = a;
            x[c + 1] = 0.6 * a;
        }
        x
    }

    #[test]
    fn window_maxima_on_repeating_ramp() {
        // 10-sample ramps 0..9 with a 1.5 s window at fs = 10 -> window 15.
        let x: Vec<f64> = (0..60).map(|i| (i % 10) as f64).collect();
        let c = DetectorConfig { t_rr_assumed_s: 1.5, ..cfg() };
        let m = window_maxima(&x, 10.0, &c).unwrap();
        assert_eq!(m, vec![9.0; 4], "every window contains a full ramp top");
    }

    #[test]
    fn window_length_matches_rate_and_assumed_rr() {
        let c = cfg();
        assert_eq!(c.window_len(250.0), 150, "0.6 s at 250 Hz");
        assert_eq!(c.window_len(360.0), 216);
    }

    #[test]
    fn window_maxima_short_final_window_merges() {
        // len 24, window 10: bounds [0,10), [10,24) since remainder 4 < half.
        let mut x = vec![0.0; 24];
        x[23] = 7.0;
        let c = DetectorConfig { t_rr_assumed_s: 1.0, ..cfg() };
        let m = window_maxima(&x, 10.0, &c).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[1], 7.0, "tail merged into the previous window");
    }

    #[test]
    fn window_maxima_half_final_window_stands_alone() {
        // len 25, window 10 -> remainder 5; with window 9 remainder 7 >= 4.5.
        let mut x = vec![0.0; 25];
        x[24] = 7.0;
        let c = DetectorConfig { t_rr_assumed_s: 0.9, ..cfg() };
        let m = window_maxima(&x, 10.0, &c).unwrap();
        assert_eq!(m.len(), 3, "7-sample tail is >= half of a 9-sample window");
        assert_eq!(m[2], 7.0);
    }

    #[test]
    fn window_maxima_rejects_short_signal() {
        let err = window_maxima(&[0.0; 100], 250.0, &cfg()).unwrap_err();
        assert!(matches!(err, DetectError::SignalTooShort { len: 100, window: 150 }));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(
            compute_threshold(&[1.0, 1.0, 1.0], &DetectorConfig { threshold_coef: 1.0, ..cfg() })
                .unwrap(),
            1.0
        );
        let th = compute_threshold(&[1.0, 0.8], &cfg()).unwrap();
        assert!((th - 0.675).abs() < 1e-15, "0.75 * mean(1.0, 0.8) = 0.675, got {th}");
        assert!(matches!(compute_threshold(&[], &cfg()), Err(DetectError::EmptyInput)));
    }

    #[test]
    fn single_pulse_gives_one_peak_at_apex() {
        let mut x = vec![0.0; 300];
        for (d, v) in [0.2, 0.6, 1.0, 0.6, 0.2].iter().enumerate() {
            x[148 + d] = *v;
        }
        let peaks = detect_r_peaks(&x, 250.0, &cfg()).unwrap();
        assert_eq!(peaks, vec![150], "one run above threshold, one apex");
    }

    #[test]
    fn refractory_keeps_taller_of_two_close_pulses() {
        // Two pulses 0.1 s apart (10 samples at fs 100), refractory 0.2 s.
        let mut x = vec![0.0; 100];
        x[50] = 0.8;
        x[60] = 1.0;
        let c = DetectorConfig { t_rr_assumed_s: 0.5, ..cfg() };
        let peaks = detect_r_peaks(&x, 100.0, &c).unwrap();
        assert_eq!(peaks, vec![60], "keep the larger peak inside the refractory span");
    }

    #[test]
    fn no_sample_above_threshold_yields_empty_not_error() {
        let x = vec![1.0; 300]; // constant: nothing strictly above the mean
        let peaks = detect_r_peaks(&x, 250.0, &DetectorConfig { threshold_coef: 1.0, ..cfg() })
            .unwrap();
        assert!(peaks.is_empty());
    }

    #[test]
    fn run_ties_collapse_to_earliest_index() {
        let mut x = vec![0.0; 300];
        x[100] = 1.0;
        x[101] = 1.0; // plateau: earliest sample wins
        let peaks = detect_r_peaks(&x, 250.0, &cfg()).unwrap();
        assert_eq!(peaks, vec![100]);
    }

    #[test]
    fn locate_qs_finds_template_dips() {
        // W shape: dips 3 samples either side of R.
        let mut x = vec![0.0; 41];
        x[20] = 1.0;
        x[17] = -0.5;
        x[23] = -0.5;
        let (q, s) = locate_qs(&x, 250.0, 20, &cfg());
        assert_eq!((q, s), (17, 23));
    }

    #[test]
    fn locate_qs_monotone_rise_puts_q_at_window_edge() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let (q, _s) = locate_qs(&x, 250.0, 60, &cfg());
        assert_eq!(q, 40, "argmin of an increasing segment is its left edge (60 - 20)");
    }

    #[test]
    fn locate_qs_ties_break_toward_r() {
        let mut x = vec![0.0; 41];
        x[20] = 1.0; // everything else equal: nearest-to-R indices win
        let (q, s) = locate_qs(&x, 250.0, 20, &cfg());
        assert_eq!((q, s), (19, 21));
    }

    #[test]
    fn locate_qs_clamps_at_signal_edges() {
        let x = vec![0.5, 1.0, 0.2, 0.4];
        let (q, s) = locate_qs(&x, 250.0, 0, &cfg());
        assert_eq!(q, 0, "empty left window degenerates to r");
        assert_eq!(s, 2);
        let (q2, s2) = locate_qs(&x, 250.0, 3, &cfg());
        assert_eq!(s2, 3, "empty right window degenerates to r");
        assert_eq!(q2, 2);
    }

    #[test]
    fn qrs_width_flat_outside_complex_halts_immediately() {
        // Plateaus at the Q and S levels: the first difference just beyond
        // each boundary is exactly zero.
        let mut x = vec![0.0; 100];
        x[47] = -0.4;
        x[48] = -0.4;
        x[50] = 1.0;
        x[52] = -0.4;
        x[53] = -0.4;
        let w = qrs_width(&x, 250.0, 48, 52, &cfg());
        assert!(
            (w - 4.0 / 250.0).abs() < 1e-12,
            "zero slope beyond q/s must stop the walk at once, got {w}"
        );
    }

    #[test]
    fn qrs_walk_respects_60ms_cap() {
        // Steep everywhere: the walk would run forever without the cap.
        let x: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 0.0 } else { 1.0 }).collect();
        let c = cfg();
        let (onset, offset) = qrs_bounds(&x, 250.0, 90, 110, &c);
        let cap = (WALK_CAP_S * 250.0).round() as usize;
        assert_eq!(onset, 90 - cap);
        assert_eq!(offset, 110 + cap);
    }

    #[test]
    fn beat_table_composes_and_reports_rr() {
        let x = spike_train(&[1.0; 8]);
        let c = DetectorConfig { t_rr_assumed_s: 1.0, refractory_s: 0.2, ..cfg() };
        let t = build_beat_table(&x, 100.0, &c).unwrap();
        assert_eq!(t.len(), 8);
        assert_eq!(t.rr_s.len(), 7);
        for rr in &t.rr_s {
            assert!((rr - 1.0).abs() < 1e-9, "1 Hz spike train, rr = {rr}");
        }
        for i in 0..t.len() {
            assert!(t.qrs_onset_s[i] < t.r_times_s[i]);
            assert!(t.r_times_s[i] < t.qrs_offset_s[i]);
            assert!(t.qrs_width_s[i] > 0.0 && t.qrs_width_s[i] < 0.3);
        }
    }

    #[test]
    fn beat_table_needs_two_beats() {
        let x = spike_train(&[1.0]);
        let c = DetectorConfig { t_rr_assumed_s: 0.5, ..cfg() };
        let err = build_beat_table(&x, 100.0, &c).unwrap_err();
        assert!(matches!(err, DetectError::TooFewBeats { found: 1 }), "got {err:?}");
    }

    #[test]
    fn detector_matches_local_maxima_oracle_on_beat_trains() {
        for amps in [
            vec![1.0, 0.9, 1.1, 0.8, 1.0, 0.95],
            vec![0.5, 1.5, 0.5, 1.5, 0.5, 1.5, 0.5],
            vec![1.0; 12],
        ] {
            let x = spike_train(&amps);
            let c = DetectorConfig { t_rr_assumed_s: 1.0, ..cfg() };
            assert_eq!(
                detect_r_peaks(&x, 100.0, &c).unwrap(),
                oracle_peaks(&x, 100.0, &c),
                "amps {amps:?}"
            );
        }
    }

    proptest! {
        /// Peak positions are invariant under positive scaling. Powers of two
        /// keep the arithmetic exact, so the indices must match exactly.
        #[test]
        fn amplitude_scale_equivariance(
            amps in prop::collection::vec(0.5f64..2.0, 3..10),
            scale_exp in -3i32..6,
        ) {
            let x = spike_train(&amps);
            let c = DetectorConfig { t_rr_assumed_s: 1.0, ..cfg() };
            let base = detect_r_peaks(&x, 100.0, &c).unwrap();
            let s = (scale_exp as f64).exp2();
            let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
            prop_assert_eq!(base, detect_r_peaks(&scaled, 100.0, &c).unwrap());
        }

        /// The oracle agrees on randomized unimodal beat trains.
        #[test]
        fn oracle_equivalence_randomized(
            amps in prop::collection::vec(0.6f64..1.4, 4..20),
        ) {
            let x = spike_train(&amps);
            let c = DetectorConfig { t_rr_assumed_s: 1.0, ..cfg() };
            prop_assert_eq!(
                detect_r_peaks(&x, 100.0, &c).unwrap(),
                oracle_peaks(&x, 100.0, &c)
            );
        }
    }
}
