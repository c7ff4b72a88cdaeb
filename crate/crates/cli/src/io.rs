//! File formats and atomic filesystem helpers.
//!
//! Text formats produced/consumed by the CLI:
//!
//! - **Record CSV** — the core library's internal record format
//!   (`# fs=<Hz> id=<name>` directive line, one sample per line).
//! - **Beat CSV** — one row per detected beat:
//!   `# record=<id> fs=<Hz>` directive, then the header
//!   `r_index,r_time_s,q_index,s_index,qrs_onset_s,qrs_offset_s,rr_s,qrs_width_s`.
//!   `rr_s` is empty on the first beat (there is no previous beat).
//! - **Feature CSV** — one row per record:
//!   `record_id,mean_rr_s,mean_qrs_s,hbr_bpm,label`.
//!
//! All writes are atomic: content goes to a temporary file in the target
//! directory which is then renamed over the destination, so a crash or error
//! never leaves a partial file behind.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use ecgvt_core::detect::BeatTable;
use ecgvt_core::features::{ClassLabel, FeatureVector};
use ecgvt_core::ingest::{read_csv_record, EcgRecord};

use crate::error::{io_with_path, CliError, CliResult};

// ---------------------------------------------------------------------------
// Atomic filesystem helpers
// ---------------------------------------------------------------------------

/// Write `content` to `path` atomically (temp file + rename).
pub fn atomic_write(path: &Path, content: &str) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io_with_path(e, dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_with_path(e, dir))?;
    tmp.write_all(content.as_bytes()).map_err(|e| io_with_path(e, path))?;
    tmp.persist(path).map_err(|e| io_with_path(e.error, path))?;
    Ok(())
}

/// Read a whole text file, reporting the path on failure.
pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| io_with_path(e, path))
}

/// Read a whole binary file, reporting the path on failure.
pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_with_path(e, path))
}

/// Read a record in the internal CSV format.
pub fn read_record(path: &Path) -> CliResult<EcgRecord> {
    Ok(read_csv_record(&read_text(path)?)?)
}

/// All `.csv` files directly inside `dir`, sorted by file name so every run
/// processes records in the same order.
pub fn list_csv_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io_with_path(e, dir))? {
        let entry = entry.map_err(|e| io_with_path(e, dir))?;
        let path = entry.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "csv") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Beat CSV
// ---------------------------------------------------------------------------

/// Column header of the beat CSV (after the `#` directive line).
pub const BEATS_HEADER: &str =
    "r_index,r_time_s,q_index,s_index,qrs_onset_s,qrs_offset_s,rr_s,qrs_width_s";

/// Render a beat table for `record_id` sampled at `fs`.
pub fn beats_to_csv(record_id: &str, fs: f64, beats: &BeatTable) -> String {
    let mut out = format!("# record={record_id} fs={fs}\n{BEATS_HEADER}\n");
    for i in 0..beats.len() {
        let rr = if i == 0 { String::new() } else { beats.rr_s[i - 1].to_string() };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            beats.r_indices[i],
            beats.r_times_s[i],
            beats.q_indices[i],
            beats.s_indices[i],
            beats.qrs_onset_s[i],
            beats.qrs_offset_s[i],
            rr,
            beats.qrs_width_s[i],
        ));
    }
    out
}

fn malformed_beats(detail: String) -> CliError {
    CliError::validation("MalformedBeatCsv", detail)
}

/// Parse a beat CSV back into `(record_id, fs, BeatTable)`.
pub fn beats_from_csv(text: &str) -> CliResult<(String, f64, BeatTable)> {
    let mut lines = text.lines();
    let directive = lines
        .next()
        .ok_or_else(|| malformed_beats("empty file".into()))?
        .trim();
    let rest = directive
        .strip_prefix("# record=")
        .ok_or_else(|| malformed_beats(format!("bad directive line {directive:?}")))?;
    let (record_id, fs_part) = rest
        .rsplit_once(" fs=")
        .ok_or_else(|| malformed_beats(format!("bad directive line {directive:?}")))?;
    let fs: f64 = fs_part
        .trim()
        .parse()
        .map_err(|_| malformed_beats(format!("bad fs in directive {directive:?}")))?;
    match lines.next().map(str::trim) {
        Some(h) if h == BEATS_HEADER => {}
        other => return Err(malformed_beats(format!("expected header {BEATS_HEADER:?}, got {other:?}"))),
    }

    let mut beats = BeatTable {
        r_indices: Vec::new(),
        r_times_s: Vec::new(),
        q_indices: Vec::new(),
        s_indices: Vec::new(),
        qrs_onset_s: Vec::new(),
        qrs_offset_s: Vec::new(),
        rr_s: Vec::new(),
        qrs_width_s: Vec::new(),
    };
    for (lineno, raw) in lines.enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(malformed_beats(format!(
                "line {}: expected 8 fields, got {}",
                lineno + 3,
                fields.len()
            )));
        }
        let bad =
            |what: &str| malformed_beats(format!("line {}: bad {what}: {line:?}", lineno + 3));
        let usize_at = |k: usize, what: &str| -> CliResult<usize> {
            fields[k].parse().map_err(|_| bad(what))
        };
        let f64_at =
            |k: usize, what: &str| -> CliResult<f64> { fields[k].parse().map_err(|_| bad(what)) };
        beats.r_indices.push(usize_at(0, "r_index")?);
        beats.r_times_s.push(f64_at(1, "r_time_s")?);
        beats.q_indices.push(usize_at(2, "q_index")?);
        beats.s_indices.push(usize_at(3, "s_index")?);
        beats.qrs_onset_s.push(f64_at(4, "qrs_onset_s")?);
        beats.qrs_offset_s.push(f64_at(5, "qrs_offset_s")?);
        let first = beats.rr_s.is_empty() && beats.qrs_width_s.is_empty();
        if fields[6].is_empty() {
            if !first {
                return Err(bad("rr_s (empty only allowed on the first beat)"));
            }
        } else {
            beats.rr_s.push(f64_at(6, "rr_s")?);
        }
        beats.qrs_width_s.push(f64_at(7, "qrs_width_s")?);
    }
    if !beats.is_empty() && beats.rr_s.len() + 1 != beats.len() {
        return Err(malformed_beats(format!(
            "{} beats need {} rr values, got {}",
            beats.len(),
            beats.len() - 1,
            beats.rr_s.len()
        )));
    }
    Ok((record_id.to_string(), fs, beats))
}

// ---------------------------------------------------------------------------
// Feature CSV
// ---------------------------------------------------------------------------

/// Column header of the feature CSV.
pub const FEATURES_HEADER: &str = "record_id,mean_rr_s,mean_qrs_s,hbr_bpm,label";

/// Render feature rows: `(record_id, features, label)` per record.
pub fn features_to_csv(rows: &[(String, FeatureVector, ClassLabel)]) -> String {
    let mut out = format!("{FEATURES_HEADER}\n");
    for (id, fv, label) in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            id, fv.mean_rr_s, fv.mean_qrs_s, fv.hbr_bpm, label
        ));
    }
    out
}

fn malformed_features(detail: String) -> CliError {
    CliError::validation("MalformedFeatureCsv", detail)
}

/// Parse a feature CSV into `(record_id, features, label)` rows.
pub fn features_from_csv(text: &str) -> CliResult<Vec<(String, FeatureVector, ClassLabel)>> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some(h) if h == FEATURES_HEADER => {}
        other => {
            return Err(malformed_features(format!(
                "expected header {FEATURES_HEADER:?}, got {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for (lineno, raw) in lines.enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(malformed_features(format!(
                "line {}: expected 5 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let bad =
            |what: &str| malformed_features(format!("line {}: bad {what}: {line:?}", lineno + 2));
        let fv = FeatureVector {
            mean_rr_s: fields[1].parse().map_err(|_| bad("mean_rr_s"))?,
            mean_qrs_s: fields[2].parse().map_err(|_| bad("mean_qrs_s"))?,
            hbr_bpm: fields[3].parse().map_err(|_| bad("hbr_bpm"))?,
        };
        let label: ClassLabel = fields[4].parse().map_err(|_| bad("label"))?;
        out.push((fields[0].to_string(), fv, label));
    }
    Ok(out)
}
