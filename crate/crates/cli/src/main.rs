//! `ecgvt` — command-line pipeline for ECG ventricular-tachycardia detection.
//!
//! Subcommands cover each pipeline stage (`synth`, `ingest`, `filter`,
//! `detect`, `label`, `train`, `eval`, `compare`, `plot`) plus `run-all`,
//! which chains synth → filter → detect → label → train → compare under one
//! output directory.
//!
//! Contract:
//! - exit code 0 on success, 1 on validation errors, 2 on I/O failures;
//! - every failure prints exactly one line to stderr:
//!   `ERROR <code>: <detail>`;
//! - outputs are written atomically, and validation happens before any
//!   output is created, so failed runs leave no partial files;
//! - identical inputs (flags, config, seeds) produce byte-identical outputs.

mod commands;
mod config;
mod error;
mod io;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::commands::{parse_mix, parse_model_kind};
use crate::config::ConfigFlags;
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "ecgvt",
    version,
    about = "ECG ventricular-tachycardia detection pipeline",
    long_about = "Synthesize, ingest, filter, and annotate ECG records; extract rhythm \
                  features; train and compare small classifiers; plot traces as SVG.\n\n\
                  Tunables resolve as defaults < --config file (`key = value` lines, keys \
                  named after the long flags) < explicit flags. Exit codes: 0 success, \
                  1 validation error, 2 I/O failure. Failures print one line to stderr: \
                  `ERROR <code>: <detail>`."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus (record CSVs plus manifest.csv)
    Synth(SynthArgs),
    /// Convert a WFDB record or internal CSV into a normalized record CSV
    Ingest(IngestArgs),
    /// Zero-phase Butterworth bandpass a record CSV
    Filter(FilterArgs),
    /// Detect beats (R peaks, Q/S, QRS widths) in a record CSV
    Detect(DetectArgs),
    /// Label records from beat CSVs with features and the VT rule
    Label(LabelArgs),
    /// Train one classifier on a feature CSV and save it as JSON
    Train(TrainArgs),
    /// Evaluate a saved model against a labeled feature CSV
    Eval(EvalArgs),
    /// Train and compare all five classifiers on one stratified split
    Compare(CompareArgs),
    /// Render a record (with optional beat markers) as SVG
    Plot(PlotArgs),
    /// Run the whole pipeline end to end under one output directory
    RunAll(RunAllArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of records to generate.
    #[arg(long)]
    n: usize,
    /// Class weights `nonvt,susvt,nonsusvt` (normalized; default uniform).
    #[arg(long, value_name = "A,B,C")]
    mix: Option<String>,
    /// Corpus seed; same seed, same corpus.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add Gaussian noise at this signal-to-noise ratio (dB). Omit for
    /// clean records.
    #[arg(long, value_name = "DB")]
    snr_db: Option<f64>,
    /// Output directory for record CSVs and manifest.csv.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "header"])))]
struct IngestArgs {
    /// Record in the internal CSV format (re-validated and normalized).
    #[arg(long = "in", value_name = "CSV")]
    input: Option<PathBuf>,
    /// WFDB header file (requires --dat).
    #[arg(long, value_name = "HEA", requires = "dat")]
    header: Option<PathBuf>,
    /// WFDB signal file (requires --header).
    #[arg(long, value_name = "DAT", requires = "header")]
    dat: Option<PathBuf>,
    /// Output record CSV.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    /// Input record CSV.
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Output (filtered) record CSV.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    #[command(flatten)]
    cfg: ConfigFlags,
}

#[derive(Args)]
struct DetectArgs {
    /// Input record CSV (typically the filtered record).
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Output beat CSV.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    #[command(flatten)]
    cfg: ConfigFlags,
}

#[derive(Args)]
struct LabelArgs {
    /// Beat CSV file or directory of beat CSVs; repeatable.
    #[arg(long = "in", value_name = "PATH", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Output feature CSV (one labeled row per record).
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    #[command(flatten)]
    cfg: ConfigFlags,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled feature CSV to train on (all rows are used).
    #[arg(long, value_name = "CSV")]
    features: PathBuf,
    /// Model kind: logreg, tree, knn, svm, or mlp.
    #[arg(long, value_name = "KIND")]
    model: String,
    /// Seed for stochastic trainers (logreg, svm, mlp shuffling/init).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model JSON.
    #[arg(long, value_name = "JSON")]
    out: PathBuf,
    #[command(flatten)]
    cfg: ConfigFlags,
}

#[derive(Args)]
struct EvalArgs {
    /// Labeled feature CSV to evaluate against.
    #[arg(long, value_name = "CSV")]
    features: PathBuf,
    /// Saved model JSON (from `train`).
    #[arg(long, value_name = "JSON")]
    model: PathBuf,
    /// Output metrics CSV; the text table goes to stdout.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Labeled feature CSV; split into train/test per --test-frac.
    #[arg(long, value_name = "CSV")]
    features: PathBuf,
    /// Seed for the stratified split and the stochastic trainers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output comparison CSV; the text table goes to stdout.
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
    #[command(flatten)]
    cfg: ConfigFlags,
}

#[derive(Args)]
struct PlotArgs {
    /// Record CSV to draw.
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Beat CSV; one circle marker is drawn per beat.
    #[arg(long, value_name = "CSV")]
    beats: Option<PathBuf>,
    /// Output SVG file.
    #[arg(long, value_name = "SVG")]
    out: PathBuf,
}

#[derive(Args)]
struct RunAllArgs {
    /// Output directory for every pipeline stage.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Number of records to synthesize.
    #[arg(long, default_value_t = 24)]
    n: usize,
    /// Class weights `nonvt,susvt,nonsusvt` (normalized; default uniform).
    #[arg(long, value_name = "A,B,C")]
    mix: Option<String>,
    /// Pipeline seed (corpus, trainers, and the comparison split).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add Gaussian noise to the corpus at this SNR (dB).
    #[arg(long, value_name = "DB")]
    snr_db: Option<f64>,
    /// Model kind saved as model.json: logreg, tree, knn, svm, or mlp.
    #[arg(long, value_name = "KIND", default_value = "logreg")]
    model: String,
    #[command(flatten)]
    cfg: ConfigFlags,
}

/// Dispatch one parsed command; any stdout reporting happens here.
fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth(a) => {
            let mix = match &a.mix {
                Some(text) => parse_mix(text)?,
                None => ecgvt_core::synth::ClassMix::default(),
            };
            let ids = commands::cmd_synth(a.n, &mix, a.seed, a.snr_db, &a.out)?;
            println!("wrote {} records and manifest.csv to {}", ids.len(), a.out.display());
            Ok(())
        }
        Command::Ingest(a) => {
            commands::cmd_ingest(a.input.as_deref(), a.header.as_deref(), a.dat.as_deref(), &a.out)?;
            println!("wrote {}", a.out.display());
            Ok(())
        }
        Command::Filter(a) => {
            let cfg = a.cfg.resolve()?;
            commands::cmd_filter(&a.input, &a.out, &cfg)?;
            println!("wrote {}", a.out.display());
            Ok(())
        }
        Command::Detect(a) => {
            let cfg = a.cfg.resolve()?;
            commands::cmd_detect(&a.input, &a.out, &cfg)?;
            println!("wrote {}", a.out.display());
            Ok(())
        }
        Command::Label(a) => {
            let cfg = a.cfg.resolve()?;
            commands::cmd_label(&a.inputs, &a.out, &cfg)?;
            println!("wrote {}", a.out.display());
            Ok(())
        }
        Command::Train(a) => {
            let cfg = a.cfg.resolve()?;
            let kind = parse_model_kind(&a.model)?;
            commands::cmd_train(&a.features, kind, a.seed, &a.out, &cfg)?;
            println!("trained {} -> {}", kind, a.out.display());
            Ok(())
        }
        Command::Eval(a) => {
            let text = commands::cmd_eval(&a.features, &a.model, &a.out)?;
            print!("{text}");
            Ok(())
        }
        Command::Compare(a) => {
            let cfg = a.cfg.resolve()?;
            let text = commands::cmd_compare(&a.features, a.seed, &a.out, &cfg)?;
            print!("{text}");
            Ok(())
        }
        Command::Plot(a) => {
            commands::cmd_plot(&a.input, a.beats.as_deref(), &a.out)?;
            println!("wrote {}", a.out.display());
            Ok(())
        }
        Command::RunAll(a) => {
            let cfg = a.cfg.resolve()?;
            let mix = match &a.mix {
                Some(text) => parse_mix(text)?,
                None => ecgvt_core::synth::ClassMix::default(),
            };
            let kind = parse_model_kind(&a.model)?;
            let log = commands::cmd_run_all(&a.out, a.n, &mix, a.seed, a.snr_db, kind, &cfg)?;
            print!("{log}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                // --help / --version are successes, rendered in full.
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            // Flag misuse is a validation error: one machine-parsable line.
            let first_line = e.to_string().lines().next().unwrap_or("bad arguments").to_string();
            let err = CliError::validation("InvalidUsage", first_line);
            eprintln!("{}", err.report_line());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
