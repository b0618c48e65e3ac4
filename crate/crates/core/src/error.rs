use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate edge {tail} -> {head}")]
    DuplicateEdge { tail: String, head: String },

    #[error("negative cost parameter {name} = {value} on edge {tail} -> {head}")]
    NegativeParameter {
        tail: String,
        head: String,
        name: &'static str,
        value: f64,
    },

    #[error("invalid demand {origin} -> {destination}: {reason}")]
    InvalidDemand {
        origin: String,
        destination: String,
        reason: String,
    },

    #[error("demand {origin} -> {destination} has no connecting path")]
    UnreachableDemand { origin: String, destination: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("negative flow {value} on edge {edge}")]
    NegativeFlow { edge: usize, value: f64 },

    #[error("negative link cost {value} on edge {edge}")]
    NegativeCost { edge: usize, value: f64 },

    #[error("path references unknown or disconnected edge {edge}")]
    UnknownEdge { edge: usize },

    #[error("more than {cap} simple paths between {origin} and {destination}")]
    PathLimitExceeded {
        origin: String,
        destination: String,
        cap: usize,
    },

    #[error("spread parameter {0} outside [0, 1]")]
    InvalidSpread(f64),

    #[error("noise sample {value} on edge {edge} outside [-1, 1]")]
    NoiseOutOfRange { edge: usize, value: f64 },

    #[error("noise distribution on edge {edge} is invalid: {reason}")]
    InvalidDistribution { edge: usize, reason: String },

    #[error("missing noise moments for edge {0}")]
    MissingMoments(usize),

    #[error("trace has no gradient tracking data")]
    NoTrackingData,

    #[error("grid of {size} points exceeds cap {cap}")]
    GridTooLarge { size: u128, cap: u128 },

    #[error("unsupported network topology: {0}")]
    WrongTopology(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
