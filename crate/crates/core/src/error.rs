use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a tree needs at least one party")]
    EmptyTree,

    #[error("edge list does not form a tree: {0}")]
    NotATree(String),

    #[error("root `{0}` is not a listed party")]
    UnknownRoot(String),

    #[error("unknown party `{0}`")]
    UnknownParty(String),

    #[error("edge `{0}` is not in the tree")]
    UnknownEdge(String),

    #[error("tree is not a line rooted at one of its ends")]
    NotALine,

    #[error("incompatible dimensions: {0}")]
    IncompatibleDims(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("reduced state requested with an empty set of kept parties")]
    EmptyKeepSet,

    #[error("malformed tensors: {0}")]
    MalformedTensors(String),

    #[error("index {index} out of range for dimension {dim}")]
    OutOfRangeIndex { index: usize, dim: usize },

    #[error(
        "insufficient resource on edge e{edge}: Schmidt rank {rank} exceeds resource dimension {available}"
    )]
    InsufficientResource {
        edge: usize,
        rank: usize,
        available: usize,
    },

    #[error("requested branch has probability {0:e}")]
    ZeroProbabilityBranch(f64),

    #[error("malformed program: {0}")]
    MalformedProgram(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error(
        "type-class enumeration needs {needed:.3e} classes (cap {cap}); use the second-order expansion for this block length"
    )]
    EnumerationCapExceeded { needed: f64, cap: usize },

    #[error("invalid epsilon {0}")]
    InvalidEpsilon(f64),

    #[error("edge thresholds use sqrt(sum eps'^2) = {total} which exceeds eps = {eps}")]
    ThresholdBudgetExceeded { total: f64, eps: f64 },

    #[error("invalid eta {0}")]
    InvalidEta(f64),

    #[error("invalid delta {0}")]
    InvalidDelta(f64),

    #[error("dimension {needed} exceeds the configured cap {cap}")]
    DimensionCapExceeded { needed: usize, cap: usize },

    #[error("projected state has zero norm; thresholds are too aggressive for this block length")]
    ZeroNorm,

    #[error("not an orthogonal projector: {0}")]
    NotAProjector(String),

    #[error("projected operator has trace {0:e}")]
    DegenerateDenominator(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
