//! Edge-level graph learning over mixed directed/undirected graphs.
//!
//! Edge signals come in two modalities: orientation-equivariant signals
//! (flows, currents) that are stored as signed values relative to a per-edge
//! reference orientation, and orientation-invariant signals (capacities,
//! resistances) that are plain scalars. This crate provides:
//!
//! - graph topology with per-edge orientations and the flip/permutation
//!   transforms that act on them ([`graph`]),
//! - complex-phase boundary operators and the four edge Laplacians built
//!   from them, plus dense oracles for verification ([`operators`]),
//! - a small reverse-mode autodiff tape over real matrices ([`autodiff`]),
//! - the EIGN architecture and its baselines ([`nn`]),
//! - synthetic benchmark generators, a DC circuit solver, and a
//!   transportation-network file loader ([`datasets`]),
//! - a training harness with Adam, gradient clipping, and metrics ([`train`]),
//! - executable checks for the equivariance/invariance guarantees ([`verify`]).

pub mod autodiff;
pub mod datasets;
pub mod experiments;
pub mod graph;
pub mod nn;
pub mod operators;
pub mod rng;
pub mod sparse;
pub mod train;
pub mod verify;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph construction: {0}")]
    Graph(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("orientation is not direction-consistent: edge {0} is directed but flipped")]
    NotDirectionConsistent(usize),
    #[error("permutation is not a bijection on 0..{0}")]
    NotBijective(usize),
    #[error("edges {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("matrix too large for dense oracle: m = {0} exceeds {1}")]
    TooLargeForDense(usize, usize),
    #[error("non-square matrix: {0}x{1}")]
    NonSquare(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("singular linear system")]
    SingularSystem,
    #[error("active-set iteration did not converge within {0} steps")]
    ActiveSetDiverged(usize),
    #[error("generation budget exceeded: {0}")]
    GenerationBudget(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("metric undefined: {0}")]
    MetricUndefined(String),
    #[error("empty split: {0}")]
    EmptySplit(String),
    #[error("checkpoint format: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
