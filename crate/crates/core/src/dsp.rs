//! Detrending and denoising.
//!
//! The workhorse is a Butterworth bandpass designed from the analog prototype
//! (pole placement on the unit circle), transformed lowpass→bandpass about
//! prewarped edge frequencies, discretized with the bilinear transform, and
//! realized as a cascade of second-order sections. Zero-phase operation comes
//! from running the cascade forward and backward over an odd-reflection
//! padded signal ([`filtfilt`]), which squares the magnitude response and
//! cancels the phase.
//!
//! A two-stage sliding-median detrender ([`detrend_median`]) is available as
//! an explicit alternative baseline-removal step.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Errors from filter design and application.
#[derive(Debug, Error)]
pub enum DspError {
    /// Bandpass parameters violate their invariants.
    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),
    /// A designed section fell outside the stability triangle. Indicates a
    /// design bug; must never occur for a valid spec.
    #[error("unstable design: {0}")]
    UnstableDesign(String),
    /// Input contained NaN or infinity.
    #[error("non-finite input sample at index {0}")]
    NonFiniteInput(usize),
    /// Signal too short for the requested zero-phase padding.
    #[error("signal too short for filtfilt: {len} samples, need > {min}")]
    TooShort { len: usize, min: usize },
    /// Detrend windows violate `0 < win1 < win2 < record duration`.
    #[error("bad detrend windows: {0}")]
    BadWindows(String),
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Bandpass design request.
///
/// `order` is the analog prototype order per passband edge; the resulting
/// digital bandpass has twice that many poles (`order` biquad sections).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandpassSpec {
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    pub order: u32,
    pub fs: f64,
}

impl BandpassSpec {
    fn validate(&self) -> Result<(), DspError> {
        if !(self.low_cut_hz > 0.0 && self.low_cut_hz < self.high_cut_hz) {
            return Err(DspError::InvalidSpec(format!(
                "need 0 < low ({}) < high ({})",
                self.low_cut_hz, self.high_cut_hz
            )));
        }
        if !(self.high_cut_hz < self.fs / 2.0) {
            return Err(DspError::InvalidSpec(format!(
                "high cut {} must be below Nyquist {}",
                self.high_cut_hz,
                self.fs / 2.0
            )));
        }
        if ![2, 4, 8].contains(&self.order) {
            return Err(DspError::InvalidSpec(format!(
                "order must be one of 2, 4, 8; got {}",
                self.order
            )));
        }
        Ok(())
    }
}

/// One second-order section with `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Poles strictly inside the unit circle (stability triangle test).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }
}

/// A designed filter: cascade of biquads plus one overall gain factor.
#[derive(Debug, Clone, PartialEq)]
pub struct BiquadCascade {
    pub sections: Vec<Biquad>,
    pub overall_gain: f64,
}

impl BiquadCascade {
    /// The identity filter (useful in tests and as a no-op stage).
    pub fn identity() -> Self {
        Self {
            sections: vec![Biquad { b0: 1.0, b1: 0.0, b2: 0.0, a1: 0.0, a2: 0.0 }],
            overall_gain: 1.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Design
// ---------------------------------------------------------------------------

/// Design a Butterworth bandpass as a stable biquad cascade.
///
/// Steps: analog prototype poles `p_k = exp(j*pi*(2k+n-1)/(2n))`, k = 1..n;
/// prewarp both edges with `w = 2*fs*tan(pi*f/fs)`; lowpass→bandpass about
/// the geometric center; bilinear transform; group conjugate pole pairs into
/// sections with numerator `(1, 0, -1)`; normalize overall gain to exactly 1
/// at the digital image of the analog center frequency.
pub fn design_butterworth_bandpass(spec: &BandpassSpec) -> Result<BiquadCascade, DspError> {
    spec.validate()?;
    let n = spec.order as usize;
    let fs = spec.fs;

    let w_lo = 2.0 * fs * (PI * spec.low_cut_hz / fs).tan();
    let w_hi = 2.0 * fs * (PI * spec.high_cut_hz / fs).tan();
    let w0 = (w_lo * w_hi).sqrt();
    let bw = w_hi - w_lo;

    // Analog bandpass poles: each prototype pole p maps to the two roots of
    // s^2 - (p*bw)*s + w0^2 = 0.
    let mut poles: Vec<Complex64> = Vec::with_capacity(2 * n);
    for k in 1..=n {
        let theta = PI * (2 * k + n - 1) as f64 / (2 * n) as f64;
        let p = Complex64::new(theta.cos(), theta.sin());
        let pb = p * (bw / 2.0);
        let disc = (pb * pb - Complex64::new(w0 * w0, 0.0)).sqrt();
        poles.push(pb + disc);
        poles.push(pb - disc);
    }

    // Bilinear transform and conjugate pairing into real-coefficient sections.
    let mut used = vec![false; poles.len()];
    let mut sections = Vec::with_capacity(n);
    for i in 0..poles.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let zi = bilinear(poles[i], fs);
        // Partner = unused pole whose bilinear image is nearest conj(zi).
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (j, used_j) in used.iter().enumerate().skip(i + 1) {
            if *used_j {
                continue;
            }
            let d = (bilinear(poles[j], fs) - zi.conj()).norm();
            if d < best_d {
                best_d = d;
                best = Some(j);
            }
        }
        let j = best.ok_or_else(|| {
            DspError::UnstableDesign("odd pole count: conjugate pairing failed".into())
        })?;
        used[j] = true;
        let zj = bilinear(poles[j], fs);

        let a1 = -(zi + zj).re;
        let a2 = (zi * zj).re;
        let section = Biquad { b0: 1.0, b1: 0.0, b2: -1.0, a1, a2 };
        if !section.is_stable() {
            return Err(DspError::UnstableDesign(format!(
                "section a1={a1} a2={a2} outside stability triangle"
            )));
        }
        sections.push(section);
    }

    // Unity gain at the digital frequency the analog center maps to.
    let f_center = fs / PI * (w0 / (2.0 * fs)).atan();
    let mut cascade = BiquadCascade { sections, overall_gain: 1.0 };
    let raw = magnitude_response(&cascade, f_center, fs);
    if !(raw.is_finite() && raw > 0.0) {
        return Err(DspError::UnstableDesign(format!(
            "non-positive raw gain {raw} at center {f_center} Hz"
        )));
    }
    cascade.overall_gain = 1.0 / raw;
    Ok(cascade)
}

/// Bilinear transform of one analog pole: `z = (2 fs + p) / (2 fs - p)`.
fn bilinear(p: Complex64, fs: f64) -> Complex64 {
    let two_fs = Complex64::new(2.0 * fs, 0.0);
    (two_fs + p) / (two_fs - p)
}

/// Magnitude of the cascade's transfer function at `f_hz`.
pub fn magnitude_response(cascade: &BiquadCascade, f_hz: f64, fs: f64) -> f64 {
    let omega = 2.0 * PI * f_hz / fs;
    let z1 = Complex64::from_polar(1.0, -omega); // z^-1
    let z2 = z1 * z1;
    let mut h = Complex64::new(cascade.overall_gain, 0.0);
    for s in &cascade.sections {
        let num = Complex64::new(s.b0, 0.0) + z1 * s.b1 + z2 * s.b2;
        let den = Complex64::new(1.0, 0.0) + z1 * s.a1 + z2 * s.a2;
        h *= num / den;
    }
    h.norm()
}

/// Analytic Butterworth bandpass magnitude mapped through the same prewarped
/// transforms the designer uses: `1 / sqrt(1 + Olp^(2n))` with
/// `Olp = (w^2 - w0^2) / (bw * w)` at `w = 2 fs tan(pi f / fs)`.
///
/// This is an independent closed-form route to the same response and serves
/// as the design oracle.
pub fn analytic_bandpass_magnitude(spec: &BandpassSpec, f_hz: f64) -> f64 {
    if f_hz <= 0.0 {
        return 0.0;
    }
    let fs = spec.fs;
    let w_lo = 2.0 * fs * (PI * spec.low_cut_hz / fs).tan();
    let w_hi = 2.0 * fs * (PI * spec.high_cut_hz / fs).tan();
    let w0sq = w_lo * w_hi;
    let bw = w_hi - w_lo;
    let w = 2.0 * fs * (PI * f_hz / fs).tan();
    let olp = (w * w - w0sq) / (bw * w);
    1.0 / (1.0 + olp.powi(2 * spec.order as i32)).sqrt()
}

// ---------------------------------------------------------------------------
// Application
// ---------------------------------------------------------------------------

/// Single forward pass: direct-form II transposed per section, zero initial
/// state, then the overall gain. Output length equals input length.
pub fn filter_forward(cascade: &BiquadCascade, x: &[f64]) -> Result<Vec<f64>, DspError> {
    if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
        return Err(DspError::NonFiniteInput(bad));
    }
    let mut y = x.to_vec();
    for s in &cascade.sections {
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for v in y.iter_mut() {
            let xin = *v;
            let yout = s.b0 * xin + s1;
            s1 = s.b1 * xin - s.a1 * yout + s2;
            s2 = s.b2 * xin - s.a2 * yout;
            *v = yout;
        }
    }
    for v in y.iter_mut() {
        *v *= cascade.overall_gain;
    }
    Ok(y)
}

/// Per-section steady-state response to a unit constant input, expressed as
/// direct-form II transposed state. Seeding each pass of [`filtfilt`] with
/// this state (scaled by the first padded sample and the DC gain accumulated
/// through earlier sections) removes the startup transient exactly for
/// constant signals and damps it for everything else.
fn steady_state_init(s: &Biquad) -> (f64, f64) {
    let g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    (g - s.b0, s.b2 - s.a2 * g)
}

/// One forward pass with each section seeded at its scaled steady state.
fn forward_from_steady_state(cascade: &BiquadCascade, x: &[f64]) -> Vec<f64> {
    let x0 = x[0];
    let mut scale = 1.0;
    let mut y = x.to_vec();
    for s in &cascade.sections {
        let (z1, z2) = steady_state_init(s);
        let (mut s1, mut s2) = (x0 * scale * z1, x0 * scale * z2);
        for v in y.iter_mut() {
            let xin = *v;
            let yout = s.b0 * xin + s1;
            s1 = s.b1 * xin - s.a1 * yout + s2;
            s2 = s.b2 * xin - s.a2 * yout;
            *v = yout;
        }
        scale *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    }
    for v in y.iter_mut() {
        *v *= cascade.overall_gain;
    }
    y
}

/// Zero-phase (bidirectional) filtering.
///
/// Pads both ends with an odd-symmetric reflection of length
/// `3 * (2 * sections + 1)`, filters forward from per-section steady-state
/// initial conditions, reverses, filters again, reverses back, and strips
/// the padding. The effective magnitude response is `|H|^2` with zero phase
/// shift, and a constant input maps to an exactly constant output.
pub fn filtfilt(cascade: &BiquadCascade, x: &[f64]) -> Result<Vec<f64>, DspError> {
    if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
        return Err(DspError::NonFiniteInput(bad));
    }
    let n = x.len();
    let min_len = 9 * cascade.sections.len();
    if n <= min_len {
        return Err(DspError::TooShort { len: n, min: min_len });
    }
    let padlen = 3 * (2 * cascade.sections.len() + 1);
    debug_assert!(padlen < n, "precondition guarantees padlen <= len - 1");

    let mut ext = Vec::with_capacity(n + 2 * padlen);
    for i in (1..=padlen).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=padlen {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let mut y = forward_from_steady_state(cascade, &ext);
    y.reverse();
    let mut y = forward_from_steady_state(cascade, &y);
    y.reverse();

    Ok(y[padlen..padlen + n].to_vec())
}

/// Remove baseline drift with a double sliding median.
///
/// The baseline estimate is `median_{win2}(median_{win1}(x))`; windows are
/// centered and shrink at the record edges. Returns `x - baseline`.
pub fn detrend_median(
    x: &[f64],
    fs: f64,
    win1_s: f64,
    win2_s: f64,
) -> Result<Vec<f64>, DspError> {
    if !(win1_s > 0.0 && win1_s < win2_s) {
        return Err(DspError::BadWindows(format!(
            "need 0 < win1 ({win1_s}) < win2 ({win2_s})"
        )));
    }
    let w2 = window_samples(win2_s, fs);
    if w2 >= x.len() {
        return Err(DspError::BadWindows(format!(
            "win2 ({win2_s} s = {w2} samples) must be shorter than the record ({} samples)",
            x.len()
        )));
    }
    let w1 = window_samples(win1_s, fs);
    let stage1 = sliding_median(x, w1);
    let baseline = sliding_median(&stage1, w2);
    Ok(x.iter().zip(&baseline).map(|(v, b)| v - b).collect())
}

/// Odd window length closest to `win_s * fs` (at least 1).
fn window_samples(win_s: f64, fs: f64) -> usize {
    let w = (win_s * fs).round().max(1.0) as usize;
    w | 1
}

fn sliding_median(x: &[f64], w: usize) -> Vec<f64> {
    let h = w / 2;
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let mut buf: Vec<f64> = Vec::with_capacity(w);
    for i in 0..n {
        let a = i.saturating_sub(h);
        let b = (i + h + 1).min(n);
        buf.clear();
        buf.extend_from_slice(&x[a..b]);
        buf.sort_unstable_by(f64::total_cmp);
        let m = buf.len();
        out.push(if m % 2 == 1 {
            buf[m / 2]
        } else {
            0.5 * (buf[m / 2 - 1] + buf[m / 2])
        });
    }
    out
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC_DEFAULT: BandpassSpec =
        BandpassSpec { low_cut_hz: 0.5, high_cut_hz: 40.0, order: 2, fs: 250.0 };

    fn all_specs() -> Vec<BandpassSpec> {
        let mut v = Vec::new();
        for &(lo, hi, fs) in &[(0.5, 40.0, 250.0), (1.0, 30.0, 360.0), (5.0, 15.0, 128.0)] {
            for &order in &[2u32, 4, 8] {
                v.push(BandpassSpec { low_cut_hz: lo, high_cut_hz: hi, order, fs });
            }
        }
        v
    }

    #[test]
    fn design_rejects_inverted_cutoffs() {
        let err = design_butterworth_bandpass(&BandpassSpec {
            low_cut_hz: 40.0,
            high_cut_hz: 0.5,
            order: 2,
            fs: 250.0,
        })
        .unwrap_err();
        assert!(matches!(err, DspError::InvalidSpec(_)), "got {err:?}");
    }

    #[test]
    fn design_rejects_odd_order_and_supra_nyquist() {
        assert!(design_butterworth_bandpass(&BandpassSpec { order: 3, ..SPEC_DEFAULT }).is_err());
        assert!(design_butterworth_bandpass(&BandpassSpec {
            high_cut_hz: 130.0,
            ..SPEC_DEFAULT
        })
        .is_err());
    }

    #[test]
    fn default_design_hits_unity_center_and_half_power_cutoffs() {
        let c = design_butterworth_bandpass(&SPEC_DEFAULT).unwrap();
        let center = (0.5f64 * 40.0).sqrt(); // 4.472 Hz
        let g = magnitude_response(&c, center, 250.0);
        assert!((g - 1.0).abs() < 0.01, "|H({center})| = {g}, want 1 +/- 0.01");
        for f in [0.5, 40.0] {
            let g = magnitude_response(&c, f, 250.0);
            let db = 20.0 * g.log10();
            assert!((db + 3.0103).abs() < 0.2, "|H({f})| = {db} dB, want -3.01 +/- 0.2");
        }
    }

    #[test]
    fn dc_gain_is_exactly_zero() {
        let c = design_butterworth_bandpass(&SPEC_DEFAULT).unwrap();
        assert_eq!(magnitude_response(&c, 0.0, 250.0), 0.0, "structural zero at z=1");
    }

    #[test]
    fn identity_cascade_is_unity_everywhere() {
        let c = BiquadCascade::identity();
        for f in [0.0, 1.0, 25.0, 125.0] {
            assert_eq!(magnitude_response(&c, f, 250.0), 1.0);
        }
    }

    #[test]
    fn all_designs_stable_and_match_analytic_magnitude() {
        for spec in all_specs() {
            let c = design_butterworth_bandpass(&spec).unwrap();
            assert_eq!(c.sections.len(), spec.order as usize);
            for s in &c.sections {
                assert!(s.is_stable(), "unstable section {s:?} for {spec:?}");
            }
            for i in 0..200 {
                let f = 0.01 + (spec.fs / 2.0 - 0.02) * i as f64 / 199.0;
                let got = magnitude_response(&c, f, spec.fs);
                let want = analytic_bandpass_magnitude(&spec, f);
                assert!(
                    (got - want).abs() < 1e-9,
                    "{spec:?} at {f} Hz: designed {got} vs analytic {want}"
                );
            }
        }
    }

    #[test]
    fn magnitude_monotone_beyond_cutoffs() {
        for spec in all_specs() {
            let c = design_butterworth_bandpass(&spec).unwrap();
            let mut prev = magnitude_response(&c, spec.high_cut_hz, spec.fs);
            let mut f = spec.high_cut_hz;
            while f < spec.fs / 2.0 - 0.5 {
                f += 0.5;
                let g = magnitude_response(&c, f, spec.fs);
                assert!(g <= prev + 1e-12, "non-monotone above high cut at {f} Hz ({spec:?})");
                prev = g;
            }
            let mut prev = magnitude_response(&c, spec.low_cut_hz, spec.fs);
            let mut f = spec.low_cut_hz;
            while f > 0.02 {
                f *= 0.8;
                let g = magnitude_response(&c, f, spec.fs);
                assert!(g <= prev + 1e-12, "non-monotone below low cut at {f} Hz ({spec:?})");
                prev = g;
            }
        }
    }

    #[test]
    fn forward_identity_passes_signal_through() {
        let x = vec![0.5, -1.0, 2.0, 0.0];
        assert_eq!(filter_forward(&BiquadCascade::identity(), &x).unwrap(), x);
    }

    #[test]
    fn forward_rejects_non_finite() {
        let err = filter_forward(&BiquadCascade::identity(), &[0.0, f64::INFINITY]).unwrap_err();
        assert!(matches!(err, DspError::NonFiniteInput(1)), "got {err:?}");
    }

    #[test]
    fn forward_matches_hand_recurrence_on_impulse() {
        // y[k] = x[k] - x[k-2] + 1.5 y[k-1] - 0.6 y[k-2], x = unit impulse.
        let c = BiquadCascade {
            sections: vec![Biquad { b0: 1.0, b1: 0.0, b2: -1.0, a1: -1.5, a2: 0.6 }],
            overall_gain: 1.0,
        };
        let y = filter_forward(&c, &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let want = [1.0, 1.5, 0.65, 0.075, -0.2775];
        for (k, (got, want)) in y.iter().zip(want.iter()).enumerate() {
            assert!((got - want).abs() < 1e-12, "impulse step {k}: {got} vs {want}");
        }
    }

    #[test]
    fn forward_is_linear() {
        let c = design_butterworth_bandpass(&SPEC_DEFAULT).unwrap();
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..100).map(|i| (i as f64 * 0.11).cos()).collect();
        let (a, b) = (2.5, -0.75);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(xv, yv)| a * xv + b * yv).collect();
        let fx = filter_forward(&c, &x).unwrap();
        let fy = filter_forward(&c, &y).unwrap();
        let fc = filter_forward(&c, &combo).unwrap();
        for i in 0..100 {
            let want = a * fx[i] + b * fy[i];
            assert!(
                (fc[i] - want).abs() <= 1e-9 * want.abs().max(1.0),
                "linearity broke at {i}: {} vs {want}",
                fc[i]
            );
        }
    }

    #[test]
    fn filtfilt_keeps_symmetric_pulse_centered() {
        let c = design_butterworth_bandpass(&SPEC_DEFAULT).unwrap();
        let n = 500;
        let center = 250usize;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let d = (i as f64 - center as f64) / 10.0;
                (-0.5 * d * d).exp()
            })
            .collect();
        let y = filtfilt(&c, &x).unwrap();
        assert_eq!(y.len(), n);
        let peak = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        assert!(
            peak.abs_diff(center) <= 1,
            "zero-phase pulse peak moved from {center} to {peak}"
        );
    }

    #[test]
    fn filtfilt_zeroes_constant_input() {
        let c = design_butterworth_bandpass(&SPEC_DEFAULT).unwrap();
        let y = filtfilt(&c, &vec![3.2; 400]).unwrap();
        let max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-6, "constant through bandpass left max |y| = {max}");
    }

    #[test]
    fn filtfilt_preserves_in_band_sinusoid_amplitude() {
        let c = design_butterworth_bandpass(&SPEC_DEFAULT).unwrap();
        let fs = 250.0;
        let n = 2500;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 5.0 * i as f64 / fs).sin()).collect();
        let y = filtfilt(&c, &x).unwrap();
        // Mid-signal amplitude, away from edge transients.
        let amp = y[n / 4..3 * n / 4].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((amp - 1.0).abs() < 0.02, "5 Hz amplitude {amp}, want 1 +/- 2%");
    }

    #[test]
    fn filtfilt_is_exactly_linear() {
        // Padding, state seeding, and the recursion are all linear in the
        // signal, so superposition must hold to float roundoff.
        let c = design_butterworth_bandpass(&SPEC_DEFAULT).unwrap();
        let x: Vec<f64> = (0..600).map(|i| (i as f64 * 0.21).sin()).collect();
        let z: Vec<f64> = (0..600).map(|i| 0.3 * (i as f64 * 0.043).cos() + 1.7).collect();
        let (a, b) = (2.5, -0.75);
        let combo: Vec<f64> = x.iter().zip(&z).map(|(xv, zv)| a * xv + b * zv).collect();
        let yx = filtfilt(&c, &x).unwrap();
        let yz = filtfilt(&c, &z).unwrap();
        let yc = filtfilt(&c, &combo).unwrap();
        for i in 0..x.len() {
            let want = a * yx[i] + b * yz[i];
            assert!(
                (yc[i] - want).abs() < 1e-9,
                "superposition broke at {i}: {} vs {want}",
                yc[i]
            );
        }
    }

    #[test]
    fn filtfilt_rejects_short_signals() {
        let c = design_butterworth_bandpass(&SPEC_DEFAULT).unwrap();
        let err = filtfilt(&c, &vec![0.0; 18]).unwrap_err();
        assert!(matches!(err, DspError::TooShort { len: 18, min: 18 }), "got {err:?}");
    }

    #[test]
    fn detrend_zeroes_constant() {
        let y = detrend_median(&vec![3.7; 1000], 250.0, 0.2, 0.6).unwrap();
        assert!(y.iter().all(|&v| v == 0.0), "median of a constant is the constant");
    }

    #[test]
    fn detrend_removes_slow_drift() {
        let fs = 250.0;
        let n = (30.0 * fs) as usize;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 0.3 * i as f64 / fs).sin()).collect();
        let y = detrend_median(&x, fs, 0.2, 0.6).unwrap();
        let rms = (y.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        assert!(rms < 0.1, "0.3 Hz drift residual RMS {rms}, want < 0.1 mV");
    }

    #[test]
    fn detrend_preserves_zero_baseline_bursts() {
        let fs = 250.0;
        let n = (30.0 * fs) as usize;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                if t % 1.0 < 0.1 { (2.0 * PI * 25.0 * t).sin() } else { 0.0 }
            })
            .collect();
        let y = detrend_median(&x, fs, 0.2, 0.6).unwrap();
        let err: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let rel = (err / energy).sqrt();
        assert!(rel < 0.05, "burst distortion {rel}, want < 5% RMS");
    }

    #[test]
    fn detrend_rejects_bad_windows() {
        assert!(matches!(
            detrend_median(&[0.0; 100], 250.0, 0.6, 0.2),
            Err(DspError::BadWindows(_))
        ));
        assert!(matches!(
            detrend_median(&[0.0; 100], 250.0, 0.1, 10.0),
            Err(DspError::BadWindows(_))
        ));
    }
}
