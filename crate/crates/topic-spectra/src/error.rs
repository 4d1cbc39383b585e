//! Crate-wide error type.
//!
//! Variants are deliberately specific: file errors name the offending
//! record, numerical errors name the quantity that failed, and pipeline
//! errors carry the stage that raised them.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {path}: {reason}")]
    MalformedManifest { path: PathBuf, reason: String },

    #[error("malformed record at {path}:{line}: {reason}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{axis} index {index} out of range (must be < {bound}) at {path}:{line}")]
    IndexOutOfRange {
        path: PathBuf,
        line: usize,
        axis: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("document {doc}: column sum {actual} disagrees with declared length {declared}")]
    LengthMismatch { doc: usize, declared: u64, actual: u64 },

    #[error("normalization diagonal is zero for word {word}; merge rare words first")]
    ZeroNormalizerEntry { word: usize },

    #[error("merging rare words would leave {remaining} rows but at least {needed} are needed")]
    VocabularyTooDegenerate { remaining: usize, needed: usize },

    #[error("rank deficiency: sigma_{k}/sigma_1 = {ratio:.3e} below 1e-12; requested rank too large for the data")]
    RankDeficient { k: usize, ratio: f64 },

    #[error("singular-pair residual check failed for component {k}: {residual:.3e} > {bound:.3e}")]
    ResidualCheck { k: usize, residual: f64, bound: f64 },

    #[error("topic concurrence matrix is singular (weight columns do not span all topics)")]
    SingularConcurrence,

    #[error("topic matrix is rank deficient: population eigenvalue {k} is {value:.3e}")]
    RankDeficientTopics { k: usize, value: f64 },

    #[error("{clamped} of {vocab} embedding denominators clamped; leading singular vector is not Perron-like (check K and rare-word preprocessing)")]
    ClampedDenominators { clamped: usize, vocab: usize },

    #[error("vertex hunting degenerated after {picked} picks: remaining projected norms below 1e-14")]
    DegenerateSimplex { picked: usize },

    #[error("vertex system is ill-conditioned (cond = {cond:.3e}); vertices {a} and {b} are closest to collinear")]
    IllConditionedVertices { cond: f64, a: usize, b: usize },

    #[error("topic {topic} collapsed: column of the unnormalized topic matrix sums to zero")]
    CollapsedTopic { topic: usize },

    #[error("weighted least-squares normal matrix is singular: estimated topics are collinear")]
    CollinearTopics,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("K = {k} exceeds the exhaustive alignment limit {max}; a Hungarian-assignment extension is not implemented")]
    AlignmentTooLarge { k: usize, max: usize },

    #[error("word {word} has zero total mass across topics; merge or remove it")]
    ZeroWordMass { word: usize },

    #[error("vocabulary size {p} exceeds the dense-matrix limit {max} for this diagnostic")]
    MatrixTooLarge { p: usize, max: usize },

    #[error("shape mismatch in {what}: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        what: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("domain error: {what}")]
    Domain { what: String },

    #[error("all trials failed; {digest}")]
    AllTrialsFailed { digest: String },

    #[error("config error at {path}:{line}: {reason}")]
    Config {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("eigensolver failed to converge: {what}")]
    EigenNoConvergence { what: String },
}

impl Error {
    /// Wraps an error with the pipeline stage that raised it.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost stage label, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
