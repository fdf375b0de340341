use std::path::PathBuf;

use thiserror::Error;

/// Broad failure category, used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Validation,
    Computation,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image error for {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("malformed manifest{}: {message}", at_line(*line))]
    MalformedManifest { line: Option<u64>, message: String },
    #[error("unknown class {label:?}{}", at_line(*line))]
    UnknownClass { line: Option<u64>, label: String },
    #[error("duplicate sample {id:?}{}", at_line(*line))]
    DuplicateSample { line: Option<u64>, id: String },
    #[error("dimension mismatch for {id:?}: {left} vs {right}")]
    DimensionMismatch { id: String, left: usize, right: usize },
    #[error("non-finite value for {name:?}{}", at_line(*line))]
    NonFinite { line: Option<u64>, name: String },
    #[error("condition {0:?} has no replicates")]
    EmptyCondition(String),
    #[error("invalid class partition: {0}")]
    InvalidPartition(String),
    #[error("need at least 2 classes, got {0}")]
    InvalidK(usize),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("image shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("image {width}x{height} is smaller than the {needed}x{needed} window")]
    ImageTooSmall { width: usize, height: usize, needed: usize },
    #[error("cannot upscale {from_w}x{from_h} to {to_w}x{to_h}")]
    Upscale { from_w: usize, from_h: usize, to_w: usize, to_h: usize },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("empty image list")]
    EmptyList,

    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("sample {0:?} has no embeddings")]
    MissingEmbedding(String),
    #[error("no record carries metric {0:?}")]
    UnknownMetric(String),

    #[error("class {0:?} has no records")]
    EmptyClass(String),
    #[error("every class is reconstructed correctly; the RDP normalizer vanishes")]
    DegenerateAllCorrect,
    #[error("no class is ever reconstructed correctly; the RDP normalizer vanishes")]
    DegenerateAllWrong,
    #[error("evaluation set is empty")]
    EmptySet,
    #[error("diversity set has no conditions")]
    EmptyDiversitySet,

    #[error("argument outside function domain: {0}")]
    Domain(String),
    #[error("count vector is empty or sums to zero")]
    EmptyCounts,
    #[error("contingency table has a zero margin")]
    DegenerateMargin,
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { got: usize, needed: usize },
    #[error("sample variance is zero")]
    ZeroVariance,

    #[error("target puts mass on class {0:?} but none are available")]
    InfeasibleTarget(String),
    #[error("partition does not hold the expected labels: {0}")]
    WrongPartition(String),
    #[error("class group {0:?} is empty")]
    EmptyGroup(String),
    #[error("no paired samples between {0} and {1}")]
    NoPairedSamples(String, String),
}

fn at_line(line: Option<u64>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. } | Image { .. } => ErrorKind::Io,
            MalformedManifest { .. }
            | UnknownClass { .. }
            | DuplicateSample { .. }
            | DimensionMismatch { .. }
            | NonFinite { .. }
            | EmptyCondition(_)
            | InvalidPartition(_)
            | InvalidK(_)
            | InvalidDistribution(_)
            | Config(_)
            | ShapeMismatch(_)
            | ImageTooSmall { .. }
            | Upscale { .. }
            | InvalidImage(_)
            | EmptyList
            | LengthMismatch(..)
            | MissingEmbedding(_)
            | UnknownMetric(_)
            | WrongPartition(_)
            | EmptyGroup(_) => ErrorKind::Validation,
            _ => ErrorKind::Computation,
        }
    }

    /// Process exit code: 1 for I/O, 2 for validation, 3 for computation.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Io => 1,
            ErrorKind::Validation => 2,
            ErrorKind::Computation => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
