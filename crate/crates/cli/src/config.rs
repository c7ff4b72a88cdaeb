//! Pipeline configuration: defaults, config-file overrides, flag overrides.
//!
//! Precedence, lowest to highest: built-in defaults, then `--config FILE`
//! (simple `key = value` lines), then explicit command-line flags. The file
//! grammar:
//!
//! ```text
//! # comment
//! low-hz = 0.5
//! threshold-coef = 0.8
//! ```
//!
//! Keys match the long flag names. Blank lines and `#` comments are ignored;
//! unknown keys and unparsable values are validation errors. A key repeated
//! later in the file wins over an earlier occurrence.

use std::path::Path;

use ecgvt_core::detect::DetectorConfig;
use ecgvt_core::dsp::BandpassSpec;
use ecgvt_core::features::{EpisodeConfig, RuleConfig};

use crate::error::{io_with_path, CliError, CliResult};

/// Every tunable the pipeline commands share, resolved to concrete values.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    // Bandpass filter.
    pub low_hz: f64,
    pub high_hz: f64,
    pub order: usize,
    // Beat detector.
    pub t_rr_s: f64,
    pub threshold_coef: f64,
    pub refractory_s: f64,
    pub qs_search_s: f64,
    pub slope_frac: f64,
    // VT rule.
    pub hbr_low_bpm: f64,
    pub hbr_high_bpm: f64,
    pub qrs_wide_s: f64,
    // Episode segmentation.
    pub min_run_beats: usize,
    pub sustained_s: f64,
    // Model comparison split.
    pub test_frac: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let d = DetectorConfig::default();
        let r = RuleConfig::default();
        let e = EpisodeConfig::default();
        Self {
            low_hz: 0.5,
            high_hz: 40.0,
            order: 2,
            t_rr_s: d.t_rr_assumed_s,
            threshold_coef: d.threshold_coef,
            refractory_s: d.refractory_s,
            qs_search_s: d.qs_search_s,
            slope_frac: d.onset_slope_frac,
            hbr_low_bpm: r.hbr_low_bpm,
            hbr_high_bpm: r.hbr_high_bpm,
            qrs_wide_s: r.qrs_wide_s,
            min_run_beats: e.min_run_beats,
            sustained_s: e.sustained_s,
            test_frac: 0.2,
        }
    }
}

impl PipelineConfig {
    /// Bandpass design for a record sampled at `fs`.
    pub fn bandpass(&self, fs: f64) -> BandpassSpec {
        BandpassSpec {
            low_cut_hz: self.low_hz,
            high_cut_hz: self.high_hz,
            order: self.order as u32,
            fs,
        }
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            t_rr_assumed_s: self.t_rr_s,
            threshold_coef: self.threshold_coef,
            refractory_s: self.refractory_s,
            qs_search_s: self.qs_search_s,
            onset_slope_frac: self.slope_frac,
        }
    }

    pub fn rule(&self) -> RuleConfig {
        RuleConfig {
            hbr_low_bpm: self.hbr_low_bpm,
            hbr_high_bpm: self.hbr_high_bpm,
            qrs_wide_s: self.qrs_wide_s,
        }
    }

    pub fn episode(&self) -> EpisodeConfig {
        EpisodeConfig { min_run_beats: self.min_run_beats, sustained_s: self.sustained_s }
    }

    /// Apply one `key = value` pair. Unknown keys and bad values are
    /// validation errors.
    fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        fn f64_value(key: &str, value: &str) -> CliResult<f64> {
            value.parse::<f64>().map_err(|_| {
                CliError::validation(
                    "InvalidConfigValue",
                    format!("key {key:?}: expected a number, got {value:?}"),
                )
            })
        }
        fn usize_value(key: &str, value: &str) -> CliResult<usize> {
            value.parse::<usize>().map_err(|_| {
                CliError::validation(
                    "InvalidConfigValue",
                    format!("key {key:?}: expected a non-negative integer, got {value:?}"),
                )
            })
        }
        match key {
            "low-hz" => self.low_hz = f64_value(key, value)?,
            "high-hz" => self.high_hz = f64_value(key, value)?,
            "order" => self.order = usize_value(key, value)?,
            "t-rr-s" => self.t_rr_s = f64_value(key, value)?,
            "threshold-coef" => self.threshold_coef = f64_value(key, value)?,
            "refractory-s" => self.refractory_s = f64_value(key, value)?,
            "qs-search-s" => self.qs_search_s = f64_value(key, value)?,
            "slope-frac" => self.slope_frac = f64_value(key, value)?,
            "hbr-low-bpm" => self.hbr_low_bpm = f64_value(key, value)?,
            "hbr-high-bpm" => self.hbr_high_bpm = f64_value(key, value)?,
            "qrs-wide-s" => self.qrs_wide_s = f64_value(key, value)?,
            "min-run-beats" => self.min_run_beats = usize_value(key, value)?,
            "sustained-s" => self.sustained_s = f64_value(key, value)?,
            "test-frac" => self.test_frac = f64_value(key, value)?,
            _ => {
                return Err(CliError::validation(
                    "UnknownConfigKey",
                    format!("unknown config key {key:?}"),
                ))
            }
        }
        Ok(())
    }

    /// Parse `key = value` text and fold it into this config.
    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::validation(
                    "MalformedConfigLine",
                    format!("line {}: expected `key = value`, got {line:?}", lineno + 1),
                ));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Load a config file on top of this config.
    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| io_with_path(e, path))?;
        self.apply_text(&text)
    }

    /// Validate cross-field invariants the library cannot see per-call.
    pub fn validate(&self) -> CliResult<()> {
        let c = |ok: bool, code: &str, msg: String| {
            if ok {
                Ok(())
            } else {
                Err(CliError::validation(code, msg))
            }
        };
        c(
            self.low_hz > 0.0 && self.high_hz > self.low_hz,
            "InvalidBand",
            format!("need 0 < low-hz < high-hz, got {} and {}", self.low_hz, self.high_hz),
        )?;
        c(
            (1..=8).contains(&self.order),
            "InvalidOrder",
            format!("order must be in 1..=8, got {}", self.order),
        )?;
        c(
            self.hbr_low_bpm > 0.0 && self.hbr_high_bpm > self.hbr_low_bpm,
            "InvalidRuleBand",
            format!(
                "need 0 < hbr-low-bpm < hbr-high-bpm, got {} and {}",
                self.hbr_low_bpm, self.hbr_high_bpm
            ),
        )?;
        c(
            self.qrs_wide_s > 0.0,
            "InvalidRuleWidth",
            format!("qrs-wide-s must be > 0, got {}", self.qrs_wide_s),
        )?;
        c(
            self.min_run_beats >= 1,
            "InvalidEpisodeConfig",
            "min-run-beats must be >= 1".into(),
        )?;
        c(
            self.sustained_s > 0.0,
            "InvalidEpisodeConfig",
            format!("sustained-s must be > 0, got {}", self.sustained_s),
        )?;
        c(
            self.test_frac > 0.0 && self.test_frac < 1.0,
            "BadFraction",
            format!("test-frac must be in (0, 1), got {}", self.test_frac),
        )?;
        Ok(())
    }
}

/// Shared config-related flags. Flags win over the config file, which wins
/// over defaults.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigFlags {
    /// Config file with `key = value` lines (keys match these flag names).
    #[arg(long, value_name = "FILE")]
    pub config: Option<std::path::PathBuf>,

    /// Bandpass lower cutoff, Hz.
    #[arg(long, value_name = "HZ")]
    pub low_hz: Option<f64>,
    /// Bandpass upper cutoff, Hz.
    #[arg(long, value_name = "HZ")]
    pub high_hz: Option<f64>,
    /// Bandpass order per edge (biquad sections per pass).
    #[arg(long, value_name = "N")]
    pub order: Option<usize>,

    /// Assumed RR interval for the detector window, seconds.
    #[arg(long, value_name = "S")]
    pub t_rr_s: Option<f64>,
    /// Detector threshold as a multiple of the mean window maximum.
    #[arg(long, value_name = "COEF")]
    pub threshold_coef: Option<f64>,
    /// Minimum spacing between accepted peaks, seconds.
    #[arg(long, value_name = "S")]
    pub refractory_s: Option<f64>,
    /// Half-width of the Q/S search around R, seconds.
    #[arg(long, value_name = "S")]
    pub qs_search_s: Option<f64>,
    /// Slope fraction that ends the QRS onset/offset walk.
    #[arg(long, value_name = "FRAC")]
    pub slope_frac: Option<f64>,

    /// VT rule: lower heart-beat-rate bound, bpm (exclusive).
    #[arg(long, value_name = "BPM")]
    pub hbr_low_bpm: Option<f64>,
    /// VT rule: upper heart-beat-rate bound, bpm (exclusive).
    #[arg(long, value_name = "BPM")]
    pub hbr_high_bpm: Option<f64>,
    /// VT rule: QRS width counted as wide, seconds (exclusive).
    #[arg(long, value_name = "S")]
    pub qrs_wide_s: Option<f64>,

    /// Minimum consecutive VT beats that form an episode.
    #[arg(long, value_name = "N")]
    pub min_run_beats: Option<usize>,
    /// Episode duration at or above which VT counts as sustained, seconds.
    #[arg(long, value_name = "S")]
    pub sustained_s: Option<f64>,

    /// Held-out fraction for model comparison, in (0, 1).
    #[arg(long, value_name = "FRAC")]
    pub test_frac: Option<f64>,
}

impl ConfigFlags {
    /// Resolve defaults < config file < flags, then validate.
    pub fn resolve(&self) -> CliResult<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        macro_rules! override_with {
            ($($field:ident),+ $(,)?) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })+
            };
        }
        override_with!(
            low_hz,
            high_hz,
            order,
            t_rr_s,
            threshold_coef,
            refractory_s,
            qs_search_s,
            slope_frac,
            hbr_low_bpm,
            hbr_high_bpm,
            qrs_wide_s,
            min_run_beats,
            sustained_s,
            test_frac,
        );
        cfg.validate()?;
        Ok(cfg)
    }
}
