//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geographic point: {0}")]
    InvalidPoint(String),

    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("invalid coverage: {0}")]
    InvalidCoverage(String),

    #[error("invalid time span: {0}")]
    InvalidTime(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("inconsistent field-of-view geometry: {0}")]
    GeometryInconsistency(String),

    #[error("relevance scale requires a non-empty candidate set")]
    EmptyCandidateSet,

    #[error("cannot build an index from an empty service list")]
    EmptyIndex,

    #[error("duplicate service id `{0}` in index")]
    DuplicateId(String),

    #[error("invalid bounded region: {0}")]
    InvalidRegion(String),

    #[error("pair scoring needs at least 2 services, found {found}")]
    InsufficientCandidates { found: usize },

    #[error("service `{0}` not found in the service set")]
    MissingService(String),

    #[error("dataset split needs at least {required} rows, found {found}")]
    InsufficientData { found: usize, required: usize },

    #[error("training data contains a single class: {0}")]
    SingleClass(String),

    #[error("optimizer failed to converge: {0}")]
    NonConvergence(String),

    #[error("training diverged (non-finite loss at epoch {epoch}); retry with a smaller step size")]
    TrainingDiverged { epoch: usize },

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("cannot evaluate on an empty row set")]
    EmptyEvaluation,

    #[error("row is missing a label")]
    UnlabeledRow,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid composability graph: {0}")]
    InvalidGraph(String),

    #[error("no composite available for selection")]
    NoComposition,

    #[error("model file rejected: {0}")]
    ModelFormat(String),
}
