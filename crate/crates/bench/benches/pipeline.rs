//! Benchmarks for the hot pipeline stages: filter design, zero-phase
//! filtering, beat detection, feature extraction, and model training.

use criterion::{black_box, criterion_group, criterion_main, Criterion, Throughput};

use ecgvt_bench::{feature_dataset, minute_record};
use ecgvt_core::detect::{build_beat_table, DetectorConfig};
use ecgvt_core::dsp::{design_butterworth_bandpass, filtfilt, BandpassSpec};
use ecgvt_core::eval::{train_model, CompareConfig};
use ecgvt_core::features::{episode_segmentation, EpisodeConfig, RuleConfig};
use ecgvt_core::ModelKind;

fn bandpass_spec() -> BandpassSpec {
    BandpassSpec { low_cut_hz: 0.5, high_cut_hz: 40.0, order: 2, fs: 250.0 }
}

fn bench_filter_design(c: &mut Criterion) {
    let spec = bandpass_spec();
    c.bench_function("design_butterworth_bandpass", |b| {
        b.iter(|| design_butterworth_bandpass(black_box(&spec)).unwrap())
    });
}

fn bench_filtfilt(c: &mut Criterion) {
    let rec = minute_record();
    let cascade = design_butterworth_bandpass(&bandpass_spec()).unwrap();
    let mut g = c.benchmark_group("filtfilt");
    g.throughput(Throughput::Elements(rec.n_samples() as u64));
    g.bench_function("minute_record", |b| {
        b.iter(|| filtfilt(black_box(&cascade), black_box(rec.samples())).unwrap())
    });
    g.finish();
}

fn bench_detect(c: &mut Criterion) {
    let rec = minute_record();
    let cascade = design_butterworth_bandpass(&bandpass_spec()).unwrap();
    let filtered = filtfilt(&cascade, rec.samples()).unwrap();
    let cfg = DetectorConfig::default();
    let mut g = c.benchmark_group("detect");
    g.throughput(Throughput::Elements(filtered.len() as u64));
    g.bench_function("build_beat_table", |b| {
        b.iter(|| build_beat_table(black_box(&filtered), 250.0, black_box(&cfg)).unwrap())
    });
    g.finish();
}

fn bench_episode_segmentation(c: &mut Criterion) {
    let rec = minute_record();
    let cascade = design_butterworth_bandpass(&bandpass_spec()).unwrap();
    let filtered = filtfilt(&cascade, rec.samples()).unwrap();
    let beats = build_beat_table(&filtered, 250.0, &DetectorConfig::default()).unwrap();
    let rule = RuleConfig::default();
    let episode = EpisodeConfig::default();
    c.bench_function("episode_segmentation", |b| {
        b.iter(|| episode_segmentation(black_box(&beats), &rule, &episode))
    });
}

fn bench_training(c: &mut Criterion) {
    let ds = feature_dataset(40);
    let cfg = CompareConfig::default();
    let mut g = c.benchmark_group("train_120_rows");
    for kind in [ModelKind::LogReg, ModelKind::Tree, ModelKind::Knn, ModelKind::LinearSvm] {
        g.bench_function(format!("{kind}"), |b| {
            b.iter(|| train_model(black_box(&ds), kind, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_filter_design,
    bench_filtfilt,
    bench_detect,
    bench_episode_segmentation,
    bench_training
);
criterion_main!(benches);
