use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sample at t={t} does not advance past previous t={previous}")]
    Sequencing { previous: f64, t: f64 },

    #[error("target at distance {distance:.6} m is outside reach [{min_reach:.6}, {max_reach:.6}]{}", sample_suffix(*.sample))]
    OutOfReach {
        distance: f64,
        min_reach: f64,
        max_reach: f64,
        sample: Option<usize>,
    },

    #[error("value {value} outside range [{lo}, {hi}] for {what}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{0} requires non-empty input")]
    EmptyInput(&'static str),

    #[error("no samples remain in window [{start}, {end}] after outlier removal")]
    EmptyWindow { start: f64, end: f64 },

    #[error("session for participant `{participant}` is incomplete")]
    IncompleteSession { participant: String },

    #[error("sensor trace does not overlap the active window [{start}, {end}]")]
    Alignment { start: f64, end: f64 },

    #[error("insufficient data: need at least {required}, got {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("balanced Latin square of odd order {0} is not supported")]
    UnsupportedOrder(usize),

    #[error("no sample size up to {cap} reaches power {target}")]
    Infeasible { cap: usize, target: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("validation failed for {item}: {reason}")]
    Validation { item: String, reason: String },

    #[error("failed to parse {what} at line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("cannot ingest {path}: {reason}")]
    Ingestion { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn sample_suffix(sample: Option<usize>) -> String {
    match sample {
        Some(i) => format!(" (sample {i})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
