use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("empty count table")]
    EmptyTable,

    #[error("value {value} outside allowed range [{min}, {max}] for {what}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("null model target {target} bits exceeds label entropy {max} bits")]
    UnattainableTarget { target: f64, max: f64 },

    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: model expects input dim {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("square loss needs an identity output layer")]
    SquareLossNeedsIdentityOutput,

    #[error("invalid target {value} for {loss} loss")]
    InvalidTarget { loss: &'static str, value: f64 },

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },

    #[error("iterates diverged at step {step} (distance {distance})")]
    Diverged { step: u64, distance: f64 },

    #[error("teacher predicts a single class on every training point")]
    DegenerateTeacher,

    #[error("I(F;Y) is zero at step {step}; ratios are undefined")]
    ZeroInformation { step: u64 },

    #[error("sparse data assumption violated on rows {rows:?}: {reason}")]
    AssumptionViolation { rows: Vec<usize>, reason: String },

    #[error("bad-init pretraining reached train accuracy {reached:.3} (target {target:.3}) within {steps} steps")]
    PretrainingFailed {
        reached: f64,
        target: f64,
        steps: u64,
    },

    #[error("bad magic number {found:#010x} in {path} (expected {expected:#010x})")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("truncated file {path}: needed {needed} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        needed: usize,
        found: usize,
    },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
