use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for an instance with {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("missing section {0}")]
    MissingSection(String),

    #[error("schema violation at {path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("unstable edge {{{0}, {1}}} is not an edge of the current solution")]
    ForeignEdge(usize, usize),

    #[error("route {route}: segment starting at position {start} mixes linehaul and backhaul customers")]
    MixedSegment { route: usize, start: usize },

    #[error("forced arc violated: {0}")]
    ForcedArc(String),

    #[error("start solution is infeasible: {0}")]
    InfeasibleStart(String),

    #[error("instance is infeasible: {0}")]
    InfeasibleInstance(String),

    #[error("external segmenter: {0}")]
    Protocol(String),

    #[error("segmenter policy {0} needs a backbone")]
    MissingBackbone(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
