//! CLI error type and the `ERROR <code>: <detail>` reporting contract.
//!
//! Every failure is reported as exactly one machine-parsable line on stderr:
//!
//! ```text
//! ERROR <code>: <detail>
//! ```
//!
//! where `<code>` is a stable identifier (the library error variant name, or
//! `Io` for filesystem failures) and `<detail>` is the human-readable
//! message. Exit codes: 0 success, 1 validation error, 2 I/O failure.

use ecgvt_core::classify::ClassifyError;
use ecgvt_core::detect::DetectError;
use ecgvt_core::dsp::DspError;
use ecgvt_core::eval::EvalError;
use ecgvt_core::features::FeatureError;
use ecgvt_core::ingest::IngestError;
use ecgvt_core::synth::SynthError;

/// A CLI failure: validation (bad flags, bad config, malformed or
/// inconsistent input *content*) or I/O (the filesystem said no).
#[derive(Debug)]
pub enum CliError {
    /// Exit code 1.
    Validation { code: String, detail: String },
    /// Exit code 2.
    Io { detail: String },
}

impl CliError {
    pub fn validation(code: impl Into<String>, detail: impl Into<String>) -> Self {
        CliError::Validation { code: code.into(), detail: detail.into() }
    }

    /// The process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 1,
            CliError::Io { .. } => 2,
        }
    }

    /// The single stderr line for this error.
    pub fn report_line(&self) -> String {
        match self {
            CliError::Validation { code, detail } => format!("ERROR {code}: {detail}"),
            CliError::Io { detail } => format!("ERROR Io: {detail}"),
        }
    }
}

/// First token of a `Debug` rendering: the enum variant name.
///
/// Library errors are `thiserror` enums whose `Debug` output starts with the
/// variant name followed by `(`, `{`, or end-of-string, so this yields a
/// stable machine-readable code without hand-maintaining a parallel list.
fn variant_name(debug: &str) -> String {
    token_prefix(debug)
}

/// Stable error code for any library error (its variant name).
pub fn error_code<E: std::fmt::Debug>(e: &E) -> String {
    token_prefix(&format!("{e:?}"))
}

fn token_prefix(debug: &str) -> String {
    debug
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect()
}

macro_rules! validation_from {
    ($($ty:ty),+ $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Validation {
                    code: variant_name(&format!("{e:?}")),
                    detail: e.to_string(),
                }
            }
        })+
    };
}

validation_from!(
    IngestError,
    SynthError,
    DspError,
    DetectError,
    FeatureError,
    ClassifyError,
    EvalError,
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io { detail: e.to_string() }
    }
}

/// Convenience alias for command implementations.
pub type CliResult<T> = Result<T, CliError>;

/// Attach a path to a raw I/O error so the stderr line says *what* failed.
pub fn io_with_path(e: std::io::Error, path: &std::path::Path) -> CliError {
    CliError::Io { detail: format!("{}: {e}", path.display()) }
}
