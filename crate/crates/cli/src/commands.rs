//! Implementations of the pipeline subcommands.
//!
//! Each function validates everything it can before producing output, then
//! writes results atomically, so a failing invocation never leaves partial
//! files behind.

use std::path::{Path, PathBuf};

use ecgvt_core::classify::{load_model, save_model, Dataset, Model, ModelKind};
use ecgvt_core::detect::build_beat_table;
use ecgvt_core::dsp::{design_butterworth_bandpass, filtfilt};
use ecgvt_core::eval::{
    compare_models, evaluate_model, CompareConfig, MetricsReport, Rate, COMPARE_ORDER,
};
use ecgvt_core::features::{episode_segmentation, record_features, record_label, ClassLabel, FeatureVector};
use ecgvt_core::ingest::{read_wfdb_record, record_to_csv};
use ecgvt_core::synth::{add_gaussian_snr, manifest_line, synth_corpus, ClassMix, MANIFEST_HEADER};

use crate::config::PipelineConfig;
use crate::error::{error_code, CliError, CliResult};
use crate::io::{
    atomic_write, beats_from_csv, beats_to_csv, features_from_csv, features_to_csv,
    list_csv_files, read_bytes, read_record, read_text,
};
use crate::svg::{render_plot, Marker};

/// Attach the offending path to a library error so the stderr line says
/// which file failed.
fn at_path<E: std::fmt::Debug + std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Validation {
        code: error_code(&e),
        detail: format!("{}: {e}", path.display()),
    }
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

/// Parse a `--mix a,b,c` weight triple (NonVT, SustainedVT, NonSustainedVT).
pub fn parse_mix(text: &str) -> CliResult<ClassMix> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::validation(
            "InvalidMix",
            format!("--mix needs 3 comma-separated weights, got {text:?}"),
        ));
    }
    let mut w = [0.0f64; 3];
    for (i, p) in parts.iter().enumerate() {
        w[i] = p.trim().parse().map_err(|_| {
            CliError::validation("InvalidMix", format!("bad mix weight {p:?} in {text:?}"))
        })?;
    }
    Ok(ClassMix { non_vt: w[0], sustained_vt: w[1], non_sustained_vt: w[2] })
}

/// Generate a labeled corpus under `out_dir`: one record CSV per record plus
/// `manifest.csv`. Returns the record ids in file order.
pub fn cmd_synth(
    n: usize,
    mix: &ClassMix,
    seed: u64,
    snr_db: Option<f64>,
    out_dir: &Path,
) -> CliResult<Vec<String>> {
    if n == 0 {
        return Err(CliError::validation("InvalidCount", "--n must be >= 1"));
    }
    if let Some(db) = snr_db {
        if !db.is_finite() {
            return Err(CliError::validation("InvalidSnr", format!("--snr-db must be finite, got {db}")));
        }
    }
    let corpus = synth_corpus(n, mix, seed)?;
    let mut manifest = String::from(MANIFEST_HEADER);
    manifest.push('\n');
    let mut pending: Vec<(PathBuf, String)> = Vec::with_capacity(corpus.len() + 1);
    let mut ids = Vec::with_capacity(corpus.len());
    for (i, (rec, truth)) in corpus.iter().enumerate() {
        // Additive noise must not reuse the per-record synthesis seed, or the
        // noise would be correlated with the record; offset into a disjoint
        // seed range instead.
        let rec = match snr_db {
            Some(db) => add_gaussian_snr(rec, db, seed.wrapping_add(1_000_000 + i as u64)),
            None => rec.clone(),
        };
        manifest.push_str(&manifest_line(rec.record_id(), truth));
        manifest.push('\n');
        pending.push((out_dir.join(format!("{}.csv", rec.record_id())), record_to_csv(&rec)));
        ids.push(rec.record_id().to_string());
    }
    pending.push((out_dir.join("manifest.csv"), manifest));
    // All content is built; only now touch the filesystem.
    for (path, content) in &pending {
        atomic_write(path, content)?;
    }
    Ok(ids)
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

/// Convert a record to the internal CSV format: either a WFDB header/signal
/// pair or an internal CSV (re-validated and normalized).
pub fn cmd_ingest(
    input_csv: Option<&Path>,
    header: Option<&Path>,
    dat: Option<&Path>,
    out: &Path,
) -> CliResult<()> {
    let rec = match (input_csv, header, dat) {
        (Some(csv), None, None) => read_record(csv)?,
        (None, Some(hea), Some(dat)) => {
            let header_text = read_text(hea)?;
            let dat_bytes = read_bytes(dat)?;
            read_wfdb_record(&header_text, &dat_bytes).map_err(at_path(hea))?
        }
        _ => {
            return Err(CliError::validation(
                "InvalidSource",
                "pass either --in CSV, or --header HEA with --dat DAT",
            ))
        }
    };
    atomic_write(out, &record_to_csv(&rec))
}

// ---------------------------------------------------------------------------
// filter / detect
// ---------------------------------------------------------------------------

/// Zero-phase bandpass a record CSV into a new record CSV.
pub fn cmd_filter(input: &Path, out: &Path, cfg: &PipelineConfig) -> CliResult<()> {
    let rec = read_record(input)?;
    let cascade = design_butterworth_bandpass(&cfg.bandpass(rec.fs()))?;
    let filtered = filtfilt(&cascade, rec.samples()).map_err(at_path(input))?;
    let filtered_rec = rec.with_samples(filtered).map_err(at_path(input))?;
    atomic_write(out, &record_to_csv(&filtered_rec))
}

/// Detect beats in a record CSV and write the beat CSV.
pub fn cmd_detect(input: &Path, out: &Path, cfg: &PipelineConfig) -> CliResult<()> {
    let rec = read_record(input)?;
    let beats =
        build_beat_table(rec.samples(), rec.fs(), &cfg.detector()).map_err(at_path(input))?;
    atomic_write(out, &beats_to_csv(rec.record_id(), rec.fs(), &beats))
}

// ---------------------------------------------------------------------------
// label
// ---------------------------------------------------------------------------

/// Expand beat CSV arguments: directories become their contained `.csv`
/// files (sorted), files pass through.
fn expand_beat_inputs(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            out.extend(list_csv_files(p)?);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::validation("NoInputs", "no beat CSV files to label"));
    }
    Ok(out)
}

/// Compute record-level features and the rule-based class for each beat CSV
/// and write one feature CSV.
pub fn cmd_label(inputs: &[PathBuf], out: &Path, cfg: &PipelineConfig) -> CliResult<()> {
    let rule = cfg.rule();
    let episode = cfg.episode();
    let mut rows: Vec<(String, FeatureVector, ClassLabel)> = Vec::new();
    for path in expand_beat_inputs(inputs)? {
        let (record_id, _fs, beats) = beats_from_csv(&read_text(&path)?)?;
        let fv = record_features(&beats).map_err(at_path(&path))?;
        let label = record_label(&episode_segmentation(&beats, &rule, &episode));
        rows.push((record_id, fv, label));
    }
    atomic_write(out, &features_to_csv(&rows))
}

// ---------------------------------------------------------------------------
// train / eval / compare
// ---------------------------------------------------------------------------

/// Parse a `--model` name into the model kind.
pub fn parse_model_kind(text: &str) -> CliResult<ModelKind> {
    match text.to_ascii_lowercase().as_str() {
        "logreg" => Ok(ModelKind::LogReg),
        "tree" => Ok(ModelKind::Tree),
        "knn" => Ok(ModelKind::Knn),
        "svm" => Ok(ModelKind::LinearSvm),
        "mlp" => Ok(ModelKind::Mlp),
        _ => Err(CliError::validation(
            "InvalidModelKind",
            format!("unknown model {text:?}; expected logreg, tree, knn, svm, or mlp"),
        )),
    }
}

/// Feature CSV rows as a training dataset (ids dropped).
fn dataset_from_features(path: &Path) -> CliResult<Dataset> {
    let rows = features_from_csv(&read_text(path)?)?;
    let rows: Vec<(FeatureVector, ClassLabel)> =
        rows.into_iter().map(|(_, fv, label)| (fv, label)).collect();
    Dataset::from_rows(rows).map_err(at_path(path))
}

/// Training hyperparameters with every stochastic component seeded.
fn seeded_compare_config(cfg: &PipelineConfig, seed: u64) -> CompareConfig {
    let mut cc = CompareConfig { test_frac: cfg.test_frac, ..CompareConfig::default() };
    cc.logreg.seed = seed;
    cc.svm.seed = seed;
    cc.mlp.seed = seed;
    cc
}

/// Train one model on every row of the feature CSV and save it as JSON.
pub fn cmd_train(
    features: &Path,
    kind: ModelKind,
    seed: u64,
    out: &Path,
    cfg: &PipelineConfig,
) -> CliResult<Model> {
    let ds = dataset_from_features(features)?;
    let model = ecgvt_core::eval::train_model(&ds, kind, &seeded_compare_config(cfg, seed))
        .map_err(at_path(features))?;
    atomic_write(out, &save_model(&model))?;
    Ok(model)
}

fn fmt_rate_text(r: &Rate) -> String {
    if r.defined {
        format!("{:.4}", r.value)
    } else {
        "n/a".to_string()
    }
}

fn fmt_rate_csv(r: &Rate) -> String {
    if r.defined {
        r.value.to_string()
    } else {
        String::new()
    }
}

/// Aligned per-class metrics table for stdout.
pub fn render_metrics_text(report: &MetricsReport) -> String {
    let mut out = format!(
        "{:<16}  {:>7}  {:>9}  {:>11}  {:>11}  {:>8}\n",
        "class", "support", "precision", "sensitivity", "specificity", "f1"
    );
    for c in &report.per_class {
        out.push_str(&format!(
            "{:<16}  {:>7}  {:>9}  {:>11}  {:>11}  {:>8}\n",
            c.label.to_string(),
            c.support,
            fmt_rate_text(&c.precision),
            fmt_rate_text(&c.sensitivity),
            fmt_rate_text(&c.specificity),
            fmt_rate_text(&c.f1),
        ));
    }
    for (tag, avg) in
        [("macro_avg", &report.macro_avg), ("weighted_avg", &report.weighted_avg)]
    {
        out.push_str(&format!(
            "{:<16}  {:>7}  {:>9.4}  {:>11.4}  {:>11}  {:>8.4}\n",
            tag, "", avg.precision, avg.sensitivity, "", avg.f1
        ));
    }
    out.push_str(&format!("accuracy: {:.4}\n", report.accuracy));
    out
}

/// Per-class metrics CSV (averages get empty support/specificity fields).
pub fn render_metrics_csv(report: &MetricsReport) -> String {
    let mut out = String::from("class,support,precision,sensitivity,specificity,f1,accuracy\n");
    for c in &report.per_class {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.label,
            c.support,
            fmt_rate_csv(&c.precision),
            fmt_rate_csv(&c.sensitivity),
            fmt_rate_csv(&c.specificity),
            fmt_rate_csv(&c.f1),
            report.accuracy
        ));
    }
    for (tag, avg) in
        [("macro_avg", &report.macro_avg), ("weighted_avg", &report.weighted_avg)]
    {
        out.push_str(&format!(
            "{},,{},{},,{},{}\n",
            tag, avg.precision, avg.sensitivity, avg.f1, report.accuracy
        ));
    }
    out
}

/// Evaluate a saved model against labeled feature rows; returns the stdout
/// report text after writing the CSV.
pub fn cmd_eval(features: &Path, model_file: &Path, out: &Path) -> CliResult<String> {
    let model = load_model(&read_text(model_file)?).map_err(at_path(model_file))?;
    let rows = features_from_csv(&read_text(features)?)?;
    let rows: Vec<(FeatureVector, ClassLabel)> =
        rows.into_iter().map(|(_, fv, label)| (fv, label)).collect();
    if rows.is_empty() {
        return Err(CliError::validation("EmptyInput", "feature CSV has no rows"));
    }
    let report = evaluate_model(&model, &rows).map_err(at_path(features))?;
    atomic_write(out, &render_metrics_csv(&report))?;
    Ok(render_metrics_text(&report))
}

/// Train and compare all five model kinds on one stratified split; writes
/// the CSV table and returns the text table for stdout.
pub fn cmd_compare(
    features: &Path,
    seed: u64,
    out: &Path,
    cfg: &PipelineConfig,
) -> CliResult<String> {
    let ds = dataset_from_features(features)?;
    let table = compare_models(&ds, &COMPARE_ORDER, &seeded_compare_config(cfg, seed), seed)
        .map_err(at_path(features))?;
    atomic_write(out, &table.render_csv())?;
    Ok(format!(
        "train: {} rows, test: {} rows\n{}",
        table.n_train,
        table.n_test,
        table.render_text()
    ))
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

/// Render a record (with optional beat markers) to SVG.
pub fn cmd_plot(input: &Path, beats: Option<&Path>, out: &Path) -> CliResult<()> {
    let rec = read_record(input)?;
    let markers = match beats {
        None => Vec::new(),
        Some(bp) => {
            let (_, _, table) = beats_from_csv(&read_text(bp)?)?;
            table
                .r_indices
                .iter()
                .zip(&table.r_times_s)
                .map(|(&idx, &t)| Marker {
                    t_s: t,
                    mv: rec.samples().get(idx).copied().unwrap_or(0.0),
                })
                .collect()
        }
    };
    let title = format!("{} ({} beats)", rec.record_id(), markers.len());
    atomic_write(out, &render_plot(rec.samples(), rec.fs(), &markers, &title))
}

// ---------------------------------------------------------------------------
// run-all
// ---------------------------------------------------------------------------

/// Chain the whole pipeline under one output directory:
///
/// ```text
/// out/corpus/rec*.csv + manifest.csv   (synth)
/// out/filtered/rec*.csv                (filter)
/// out/beats/rec*.csv                   (detect)
/// out/features.csv                     (label)
/// out/model.json                       (train, logistic regression)
/// out/compare.csv + compare.txt        (compare, all five models)
/// out/plots/rec000.svg                 (plot, first record)
/// ```
///
/// Returns the text lines printed to stdout.
#[allow(clippy::too_many_arguments)]
pub fn cmd_run_all(
    out_dir: &Path,
    n: usize,
    mix: &ClassMix,
    seed: u64,
    snr_db: Option<f64>,
    train_kind: ModelKind,
    cfg: &PipelineConfig,
) -> CliResult<String> {
    let corpus_dir = out_dir.join("corpus");
    let filtered_dir = out_dir.join("filtered");
    let beats_dir = out_dir.join("beats");
    let mut log = String::new();

    let ids = cmd_synth(n, mix, seed, snr_db, &corpus_dir)?;
    log.push_str(&format!("synth: {} records -> {}\n", ids.len(), corpus_dir.display()));

    for id in &ids {
        let raw = corpus_dir.join(format!("{id}.csv"));
        let filtered = filtered_dir.join(format!("{id}.csv"));
        cmd_filter(&raw, &filtered, cfg)?;
        cmd_detect(&filtered, &beats_dir.join(format!("{id}.csv")), cfg)?;
    }
    log.push_str(&format!("filter+detect: {} records\n", ids.len()));

    let features = out_dir.join("features.csv");
    cmd_label(&[beats_dir.clone()], &features, cfg)?;
    log.push_str(&format!("label: {}\n", features.display()));

    let model_path = out_dir.join("model.json");
    cmd_train(&features, train_kind, seed, &model_path, cfg)?;
    log.push_str(&format!("train: {} -> {}\n", train_kind, model_path.display()));

    let compare_csv = out_dir.join("compare.csv");
    let table_text = cmd_compare(&features, seed, &compare_csv, cfg)?;
    atomic_write(&out_dir.join("compare.txt"), &table_text)?;
    log.push_str(&table_text);

    if let Some(first) = ids.first() {
        let svg = out_dir.join("plots").join(format!("{first}.svg"));
        cmd_plot(
            &filtered_dir.join(format!("{first}.csv")),
            Some(&beats_dir.join(format!("{first}.csv"))),
            &svg,
        )?;
        log.push_str(&format!("plot: {}\n", svg.display()));
    }
    Ok(log)
}
