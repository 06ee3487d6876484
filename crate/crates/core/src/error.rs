use std::fmt;

/// One invalid configuration field.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub reason: String,
}

impl ConfigIssue {
    pub fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("norm drift {drift:.3e} in orbital {orbital} at step {step}")]
    NormDrift {
        orbital: usize,
        step: usize,
        drift: f64,
    },

    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("band around harmonic {order} reaches order {upper:.3}, beyond the Nyquist order {nyquist:.3}")]
    BandBeyondNyquist { order: u32, upper: f64, nyquist: f64 },

    #[error("grid mismatch: expected {expected} samples, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("fit needs at least {needed} points, got {got}")]
    TooFewFitPoints { needed: usize, got: usize },

    #[error("harmonic order {0} is not part of this result")]
    MissingHarmonic(u32),

    #[error("scan failed at phi = {phi} deg, t1 = {t1}: {source}")]
    ScanPoint {
        phi: f64,
        t1: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("unknown figure preset `{0}` (expected fig2..fig8)")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Short machine-readable tag used in CLI error records and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) | Error::InvalidPulse(_) => "invalid-input",
            Error::NormDrift { .. } => "norm-drift",
            Error::SeriesTooShort { .. }
            | Error::BandBeyondNyquist { .. }
            | Error::GridMismatch { .. }
            | Error::TooFewFitPoints { .. }
            | Error::MissingHarmonic(_) => "numerical",
            Error::ScanPoint { source, .. } => source.kind(),
            Error::Config(_) | Error::UnknownPreset(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "config",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
