use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid distribution parameters: {0}")]
    InvalidDistribution(String),

    #[error("vertex {vertex:?} lies outside the box with corner {corner:?}")]
    OutsideBox { vertex: Vec<i64>, corner: Vec<i64> },

    #[error("target {target:?} is not reachable from {from:?} by a directed path")]
    NotOrdered { from: Vec<i64>, target: Vec<i64> },

    #[error("target {0:?} is unreachable under the active constraint")]
    Unreachable(Vec<i64>),

    #[error("shift by {shift} would make weight {min_weight} negative")]
    NegativeShift { shift: f64, min_weight: f64 },

    #[error("path enumeration needs |x|_1 = {length}, above the cap {cap}")]
    CapExceeded { length: u64, cap: u64 },

    #[error("degenerate ensemble: {0}")]
    Degenerate(String),

    #[error("radius grid exhausted before confinement reached q = {q} at n = {n}")]
    GridExhausted { q: f64, n: u64 },

    #[error("curvature signal is flat within noise: {0}")]
    FlatWithinNoise(String),

    #[error("unbounded weight distribution: {0}")]
    Unbounded(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::InvalidDistribution(_) | LabError::Json(_) => 2,
            LabError::Degenerate(_) => 3,
            LabError::ResourceCap(_) => 4,
            _ => 1,
        }
    }
}
