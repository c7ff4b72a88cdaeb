//! Record ingestion: minimal WFDB header/signal parsing and an internal CSV
//! record format, both producing the shared [`EcgRecord`].
//!
//! Supported WFDB signal encodings are format 212 (two 12-bit samples packed
//! into three bytes) and format 16 (little-endian signed 16-bit). Only the
//! first signal of a multi-signal record is kept; the rest are decoded and
//! discarded.
//!
//! The internal CSV format is line-oriented:
//!
//! ```text
//! # fs=250 id=rec0001
//! 0.0125
//! -0.04
//! ```
//!
//! The directive line is mandatory — there is no sampling-rate guessing.
//! Amplitudes are millivolts, one per line. Lines after the first that start
//! with `#` are treated as comments; blank lines are ignored.

use thiserror::Error;

/// Highest sampling rate accepted as physiologically plausible input.
const MAX_FS_HZ: f64 = 10_000.0;

/// Errors produced while parsing external record formats.
#[derive(Debug, Error)]
pub enum IngestError {
    /// The header record line or a signal line could not be parsed.
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    /// A signal declares a format code other than 212 or 16.
    #[error("unsupported signal format code {0}")]
    UnsupportedFormat(u32),
    /// The signal file ends before all declared samples are present.
    #[error("truncated signal data: need {needed} bytes, got {got}")]
    TruncatedData { needed: usize, got: usize },
    /// The CSV record lacks the mandatory `# fs=<Hz> id=<name>` first line.
    #[error("missing CSV directive line: {0}")]
    MissingDirective(String),
    /// A CSV sample line failed to parse as a decimal float.
    #[error("non-numeric sample on line {line}: {content:?}")]
    NonNumericSample { line: usize, content: String },
    /// ADC-to-millivolt conversion requires a strictly positive gain.
    #[error("invalid gain {0} (must be > 0)")]
    InvalidGain(f64),
    /// Sampling rate outside (0, 10000] Hz.
    #[error("invalid sampling rate {0} Hz")]
    InvalidSamplingRate(f64),
    /// A sample value was NaN or infinite.
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
}

// ---------------------------------------------------------------------------
// EcgRecord
// ---------------------------------------------------------------------------

/// A sampled single-lead ECG signal in millivolts.
///
/// Construction validates the sampling rate and sample finiteness, so every
/// live `EcgRecord` satisfies: all samples finite, `0 < fs <= 10000`.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    record_id: String,
    fs: f64,
    samples: Vec<f64>,
}

impl EcgRecord {
    /// Validate and build a record. Rejects non-positive or absurd sampling
    /// rates and any NaN/infinite sample.
    pub fn new(
        record_id: impl Into<String>,
        fs: f64,
        samples: Vec<f64>,
    ) -> Result<Self, IngestError> {
        if !fs.is_finite() || fs <= 0.0 || fs > MAX_FS_HZ {
            return Err(IngestError::InvalidSamplingRate(fs));
        }
        if let Some(bad) = samples.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::NonFiniteSample(bad));
        }
        Ok(Self { record_id: record_id.into(), fs, samples })
    }

    /// Identifier carried through every downstream artifact.
    pub fn record_id(&self) -> &str {
        &self.record_id
    }

    /// Sampling rate in Hz.
    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Amplitudes in millivolts.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Consume the record, returning its samples.
    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Number of samples.
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// Total record time in seconds (`n_samples / fs`).
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Time between consecutive samples in seconds (`1 / fs`).
    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.fs
    }

    /// Same record with different samples (used by filtering stages, which
    /// must preserve id/fs). Panics never: validation re-runs on content.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self, IngestError> {
        Self::new(self.record_id.clone(), self.fs, samples)
    }
}

// ---------------------------------------------------------------------------
// WFDB header
// ---------------------------------------------------------------------------

/// One signal declaration from a WFDB header.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    /// 212 or 16.
    pub format_code: u32,
    /// ADC units per millivolt; defaults to 200 when unspecified.
    pub gain: f64,
    /// ADC units subtracted before gain division; defaults to 0.
    pub baseline: i32,
    pub description: String,
}

/// Parsed WFDB header: record line plus per-signal lines.
#[derive(Debug, Clone, PartialEq)]
pub struct WfdbHeader {
    pub record_name: String,
    pub n_signals: usize,
    pub fs: f64,
    /// Samples per signal; `None` when the record line omits the count.
    pub n_samples: Option<usize>,
    pub signals: Vec<SignalSpec>,
}

/// Default ADC gain when a signal line does not state one.
pub const DEFAULT_GAIN: f64 = 200.0;

/// Parse WFDB header text.
///
/// The record line is `name n_signals fs [n_samples]`. Signal lines accept
/// either the compact form `file format [gain [baseline]] [description]` or
/// the full PhysioNet form `file format gain adc_res adc_zero initval cksum
/// bsize description` (detected by field count >= 8), where the ADC zero
/// supplies the baseline unless the gain carries an explicit `(baseline)`.
pub fn parse_wfdb_header(text: &str) -> Result<WfdbHeader, IngestError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let record_line = lines
        .next()
        .ok_or_else(|| IngestError::MalformedHeader("empty header".into()))?;
    let fields: Vec<&str> = record_line.split_whitespace().collect();
    if fields.len() < 3 {
        return Err(IngestError::MalformedHeader(format!(
            "record line needs >= 3 fields, got {}: {record_line:?}",
            fields.len()
        )));
    }
    let record_name = fields[0].to_string();
    let n_signals: usize = fields[1]
        .parse()
        .map_err(|_| IngestError::MalformedHeader(format!("bad signal count {:?}", fields[1])))?;
    if n_signals < 1 {
        return Err(IngestError::MalformedHeader("n_signals must be >= 1".into()));
    }
    let fs: f64 = fields[2]
        .parse()
        .map_err(|_| IngestError::MalformedHeader(format!("non-numeric fs {:?}", fields[2])))?;
    if !fs.is_finite() || fs <= 0.0 || fs > MAX_FS_HZ {
        return Err(IngestError::MalformedHeader(format!("fs {fs} out of range")));
    }
    let n_samples = match fields.get(3) {
        Some(tok) => Some(tok.parse::<usize>().map_err(|_| {
            IngestError::MalformedHeader(format!("bad sample count {tok:?}"))
        })?),
        None => None,
    };

    let mut signals = Vec::with_capacity(n_signals);
    for _ in 0..n_signals {
        let line = lines.next().ok_or_else(|| {
            IngestError::MalformedHeader(format!(
                "expected {n_signals} signal lines, found {}",
                signals.len()
            ))
        })?;
        signals.push(parse_signal_line(line)?);
    }

    Ok(WfdbHeader { record_name, n_signals, fs, n_samples, signals })
}

fn parse_signal_line(line: &str) -> Result<SignalSpec, IngestError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(IngestError::MalformedHeader(format!(
            "signal line needs >= 2 fields: {line:?}"
        )));
    }
    let file_name = fields[0].to_string();
    // Format tokens may carry suffixes (e.g. "212x1"); the leading integer is
    // the format code.
    let digits: String = fields[1].chars().take_while(|c| c.is_ascii_digit()).collect();
    let format_code: u32 = digits
        .parse()
        .map_err(|_| IngestError::MalformedHeader(format!("bad format token {:?}", fields[1])))?;
    if format_code != 212 && format_code != 16 {
        return Err(IngestError::UnsupportedFormat(format_code));
    }

    let (mut gain, mut paren_baseline) = (DEFAULT_GAIN, None);
    if let Some(tok) = fields.get(2) {
        let (g, b) = parse_gain_token(tok)?;
        gain = g;
        paren_baseline = b;
    }
    if gain <= 0.0 {
        return Err(IngestError::MalformedHeader(format!("gain must be > 0, got {gain}")));
    }

    let full_form = fields.len() >= 8;
    let mut baseline = 0i32;
    let mut description = String::new();
    if full_form {
        // file fmt gain adc_res adc_zero initval cksum bsize description...
        baseline = match paren_baseline {
            Some(b) => b,
            None => fields[4].parse().map_err(|_| {
                IngestError::MalformedHeader(format!("bad adc zero {:?}", fields[4]))
            })?,
        };
        description = fields[8..].join(" ");
    } else {
        if let Some(b) = paren_baseline {
            baseline = b;
            description = fields.get(3..).map(|f| f.join(" ")).unwrap_or_default();
        } else if let Some(tok) = fields.get(3) {
            match tok.parse::<i32>() {
                Ok(b) => {
                    baseline = b;
                    description = fields.get(4..).map(|f| f.join(" ")).unwrap_or_default();
                }
                // Non-numeric fourth field: description starts there.
                Err(_) => description = fields[3..].join(" "),
            }
        }
    }

    Ok(SignalSpec { file_name, format_code, gain, baseline, description })
}

/// Split a gain token of the form `gain[(baseline)][/units]`.
fn parse_gain_token(tok: &str) -> Result<(f64, Option<i32>), IngestError> {
    let no_units = tok.split('/').next().unwrap_or(tok);
    let (gain_str, baseline) = match no_units.find('(') {
        Some(open) => {
            let close = no_units.find(')').ok_or_else(|| {
                IngestError::MalformedHeader(format!("unclosed baseline in {tok:?}"))
            })?;
            let b: i32 = no_units[open + 1..close].parse().map_err(|_| {
                IngestError::MalformedHeader(format!("bad baseline in {tok:?}"))
            })?;
            (&no_units[..open], Some(b))
        }
        None => (no_units, None),
    };
    let gain: f64 = gain_str
        .parse()
        .map_err(|_| IngestError::MalformedHeader(format!("non-numeric gain {tok:?}")))?;
    Ok((gain, baseline))
}

// ---------------------------------------------------------------------------
// Signal decoding
// ---------------------------------------------------------------------------

/// Decode `n_samples` interleaved samples from WFDB format 212.
///
/// Each byte triple `(b0, b1, b2)` packs two 12-bit two's-complement samples:
/// `s1 = ((b1 & 0x0F) << 8) | b0`, `s2 = ((b1 & 0xF0) << 4) | b2`, each
/// sign-extended from 12 bits.
pub fn decode_format_212(bytes: &[u8], n_samples: usize) -> Result<Vec<i32>, IngestError> {
    let needed = n_samples.div_ceil(2) * 3 - if n_samples % 2 == 1 { 1 } else { 0 };
    // A trailing odd sample only needs b0 and b1; accept files that omit the
    // final padding byte but also accept ones that include it.
    if bytes.len() < needed {
        return Err(IngestError::TruncatedData { needed, got: bytes.len() });
    }
    let mut out = Vec::with_capacity(n_samples);
    let mut i = 0;
    while out.len() < n_samples {
        let b0 = bytes[i] as i32;
        let b1 = bytes[i + 1] as i32;
        out.push(sign_extend_12(((b1 & 0x0F) << 8) | b0));
        if out.len() < n_samples {
            let b2 = bytes[i + 2] as i32;
            out.push(sign_extend_12(((b1 & 0xF0) << 4) | b2));
        }
        i += 3;
    }
    Ok(out)
}

fn sign_extend_12(v: i32) -> i32 {
    if v >= 2048 {
        v - 4096
    } else {
        v
    }
}

/// Decode `n_samples` from WFDB format 16 (little-endian signed 16-bit).
pub fn decode_format_16(bytes: &[u8], n_samples: usize) -> Result<Vec<i32>, IngestError> {
    let needed = n_samples * 2;
    if bytes.len() < needed {
        return Err(IngestError::TruncatedData { needed, got: bytes.len() });
    }
    Ok(bytes[..needed]
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as i32)
        .collect())
}

/// Convert raw ADC units to millivolts: `(adc - baseline) / gain`.
pub fn to_millivolts(adc: &[i32], gain: f64, baseline: i32) -> Result<Vec<f64>, IngestError> {
    if !gain.is_finite() || gain <= 0.0 {
        return Err(IngestError::InvalidGain(gain));
    }
    Ok(adc.iter().map(|&v| (v - baseline) as f64 / gain).collect())
}

/// Parse a WFDB header plus its signal file into an [`EcgRecord`] holding
/// signal 0 in millivolts. Other signals are decoded and discarded.
///
/// All signals are assumed to share one `.dat` file with sample interleaving
/// by signal index, which covers single-file multi-signal records.
pub fn read_wfdb_record(header_text: &str, dat_bytes: &[u8]) -> Result<EcgRecord, IngestError> {
    let header = parse_wfdb_header(header_text)?;
    let sig0 = &header.signals[0];

    let per_signal = match header.n_samples {
        Some(n) => n,
        None => {
            // Infer from the data length for the declared format.
            let raw = match sig0.format_code {
                212 => bytes_to_samples_212(dat_bytes.len()),
                _ => dat_bytes.len() / 2,
            };
            raw / header.n_signals
        }
    };
    let total = per_signal * header.n_signals;
    let interleaved = match sig0.format_code {
        212 => decode_format_212(dat_bytes, total)?,
        16 => decode_format_16(dat_bytes, total)?,
        other => return Err(IngestError::UnsupportedFormat(other)),
    };
    let channel0: Vec<i32> = interleaved
        .iter()
        .copied()
        .step_by(header.n_signals)
        .take(per_signal)
        .collect();
    let mv = to_millivolts(&channel0, sig0.gain, sig0.baseline)?;
    EcgRecord::new(header.record_name, header.fs, mv)
}

/// How many whole samples fit in `n` bytes of format-212 data.
fn bytes_to_samples_212(n: usize) -> usize {
    (n / 3) * 2 + if n % 3 == 2 { 1 } else { 0 }
}

// ---------------------------------------------------------------------------
// Internal CSV record format
// ---------------------------------------------------------------------------

/// Read the internal CSV record format (see module docs for the grammar).
pub fn read_csv_record(text: &str) -> Result<EcgRecord, IngestError> {
    let mut fs: Option<f64> = None;
    let mut id: Option<String> = None;
    let mut samples = Vec::new();
    let mut directive_seen = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if !directive_seen {
            if !line.starts_with('#') {
                return Err(IngestError::MissingDirective(
                    "first line must be `# fs=<Hz> id=<name>`".into(),
                ));
            }
            for tok in line.trim_start_matches('#').split_whitespace() {
                if let Some(v) = tok.strip_prefix("fs=") {
                    fs = Some(v.parse().map_err(|_| {
                        IngestError::MissingDirective(format!("bad fs value {v:?}"))
                    })?);
                } else if let Some(v) = tok.strip_prefix("id=") {
                    id = Some(v.to_string());
                }
            }
            if fs.is_none() || id.is_none() {
                return Err(IngestError::MissingDirective(format!(
                    "directive must contain fs= and id=, got {line:?}"
                )));
            }
            directive_seen = true;
            continue;
        }
        if line.starts_with('#') {
            continue; // comment
        }
        let v: f64 = line.parse().map_err(|_| IngestError::NonNumericSample {
            line: idx + 1,
            content: line.to_string(),
        })?;
        samples.push(v);
    }
    if !directive_seen {
        return Err(IngestError::MissingDirective("empty file".into()));
    }
    EcgRecord::new(id.unwrap(), fs.unwrap(), samples)
}

/// Serialize a record in the internal CSV format. Floats use Rust's shortest
/// round-trip representation, so read-back is lossless and output bytes are
/// deterministic.
pub fn record_to_csv(rec: &EcgRecord) -> String {
    let mut out = String::with_capacity(rec.n_samples() * 10 + 32);
    out.push_str(&format!("# fs={} id={}\n", rec.fs(), rec.record_id()));
    for v in rec.samples() {
        out.push_str(&format!("{v}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
