use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("polyline needs at least 2 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("polyline has zero length")]
    ZeroLength,
    #[error("empty input")]
    EmptyInput,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("corpus contains no usable curves")]
    EmptyCorpus,
    #[error("tangent window points are coincident")]
    DegenerateTangent,
    #[error("inducer positions coincide")]
    CoincidentInducers,
    #[error("no matching fragments")]
    NoSamples,
    #[error("no prior fragments for this configuration and fallback is disabled")]
    NoPrior,
    #[error("midway recursion exhausted at depth {0}")]
    RecursionExhausted(usize),
    #[error("only {found} scale(s) had enough samples, at least 2 required")]
    InsufficientScales { found: usize },
    #[error("clothoid solver did not converge")]
    NoConvergence,
    #[error("arc length {s} outside [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
    #[error("need at least 2 images to split, got {0}")]
    TooFewImages(usize),
    #[error("scale bin {bin} has {available} candidate fragments, {needed} needed")]
    BinUnderflow {
        bin: usize,
        available: usize,
        needed: usize,
    },
    #[error("invalid snapshot: {0}")]
    Snapshot(String),
    #[error("snapshot does not match corpus: {0}")]
    ChecksumMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure rather than of the input data.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence
                | Error::RecursionExhausted(_)
                | Error::NoPrior
                | Error::NoSamples
                | Error::InsufficientScales { .. }
        )
    }
}
