//! Deterministic fixtures shared by the pipeline benchmarks.

use ecgvt_core::classify::Dataset;
use ecgvt_core::features::{ClassLabel, FeatureVector};
use ecgvt_core::ingest::EcgRecord;
use ecgvt_core::synth::{synth_record, Episode, NoiseSpec, SynthSpec};

/// A one-minute record with a 25-second VT run in the middle: long enough to
/// exercise windowing and episode handling, short enough to keep benchmark
/// iterations fast.
pub fn minute_record() -> EcgRecord {
    let spec = SynthSpec {
        fs: 250.0,
        duration_s: 60.0,
        base_hr_bpm: 75.0,
        qrs_width_s: 0.08,
        episodes: vec![Episode { start_s: 20.0, end_s: 45.0, hr_bpm: 180.0, qrs_width_s: 0.15 }],
        noise: NoiseSpec { gaussian_sigma_mv: 0.05, ..NoiseSpec::default() },
        seed: 17,
    };
    let (rec, _truth) = synth_record(&spec, "bench_minute").expect("valid spec");
    rec
}

/// A feature dataset with `per_class` rows per class, spread around three
/// class-typical centers with deterministic index-based jitter.
pub fn feature_dataset(per_class: usize) -> Dataset {
    let centers = [
        (ClassLabel::NonVT, 0.80, 0.08, 75.0),
        (ClassLabel::SustainedVT, 0.33, 0.15, 180.0),
        (ClassLabel::NonSustainedVT, 0.42, 0.14, 142.0),
    ];
    let mut rows = Vec::with_capacity(3 * per_class);
    for (label, rr, qrs, hbr) in centers {
        for i in 0..per_class {
            let t = i as f64;
            // Bounded, aperiodic jitter; no RNG needed for a benchmark corpus.
            let j1 = (t * 0.7).sin() * 0.03;
            let j2 = (t * 1.3 + 0.5).cos() * 0.008;
            let j3 = (t * 2.1 + 1.0).sin() * 6.0;
            rows.push((
                FeatureVector { mean_rr_s: rr + j1, mean_qrs_s: qrs + j2, hbr_bpm: hbr + j3 },
                label,
            ));
        }
    }
    Dataset::from_rows(rows).expect("non-degenerate features")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minute_record_is_a_full_minute_at_250_hz() {
        let rec = minute_record();
        assert_eq!(rec.n_samples(), 15_000);
        assert_eq!(rec.fs(), 250.0);
    }

    #[test]
    fn feature_dataset_is_balanced() {
        let ds = feature_dataset(40);
        assert_eq!(ds.len(), 120);
        assert_eq!(ds.label_set().len(), 3);
    }
}
