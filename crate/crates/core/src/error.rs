use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("point {0:?} is not on the lattice")]
    OffLattice(Vec<f64>),
    #[error("symbol is not elliptic: minimum {min} on the unit sphere")]
    NonElliptic { min: f64 },
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    #[error("divergent local integral: {0}")]
    DivergentLocalIntegral(String),
    #[error("negative potential sample {value} at {position:?}")]
    SignError { value: f64, position: Vec<f64> },
    #[error("branch {branch} violates {inequality}")]
    BranchViolation { branch: String, inequality: String },
    #[error("spectral parameter hits the lattice spectrum (|z - P| = {gap:e})")]
    SpectrumHit { gap: f64 },
    #[error("shift is not grid periodic: {0}")]
    NonPeriodicShift(String),
    #[error("{} contour node(s) failed to converge: {nodes:?}", nodes.len())]
    NodeFailure { nodes: Vec<usize> },
    #[error("Neumann series did not converge after {terms} terms (ratio {ratio})")]
    NoConvergence { terms: usize, ratio: f64 },
    #[error("method unavailable: {0}")]
    MethodUnavailable(String),
    #[error("no feasible envelope: {0}")]
    NoFeasibleEnvelope(String),
    #[error("mass below floor at t = {censored:?}")]
    MassBelowFloor { censored: Vec<f64> },
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("all trial functions are degenerate")]
    DegenerateTrial,
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
