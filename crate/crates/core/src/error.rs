//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid {grid:?} describes {cells} cells but the signal has {len} values")]
    GridMismatch {
        grid: Vec<usize>,
        cells: usize,
        len: usize,
    },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("vector is not unit norm (|1 - norm| = {deviation:.3e})")]
    NotUnitNorm { deviation: f64 },

    #[error("sample set must contain at least one signal")]
    EmptySampleSet,

    #[error("samples disagree on shape: sample {index} has d={got}, expected d={expected}")]
    InhomogeneousSamples {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("base set must contain at least one base")]
    EmptyBaseSet,

    #[error("bases {first} and {second} are equal after quantization to {bits} bits")]
    DuplicateBase {
        first: usize,
        second: usize,
        bits: u32,
    },

    #[error("symbol '{name}' in domain '{domain}' is already bound to a different base")]
    SymbolConflict { name: String, domain: String },

    #[error("index {index} out of range for {len} bases")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("candidate base count {requested} exceeds sample count {available}")]
    TooFewSamples { requested: usize, available: usize },

    #[error("oracle guard: {0}")]
    OracleGuard(String),

    #[error("node at {path:?} is not a leaf")]
    NotALeaf { path: Vec<usize> },

    #[error("subsample for base {base} has {got} samples, need at least {needed}")]
    SubsampleTooSmall {
        base: usize,
        got: usize,
        needed: usize,
    },

    #[error("validator was built against a different training set or base set")]
    ValidatorMismatch,

    #[error("symbol '{0}' is not part of the universe")]
    OutsideUniverse(String),

    #[error("receiver knowledge must be a subset of its codebook")]
    KnowledgeNotDecodable,

    #[error("unknown generator '{0}'")]
    UnknownGenerator(String),

    #[error("corrupt corpus file: {0}")]
    CorruptCorpus(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
