use thiserror::Error;

use crate::eigensolver::GroundSolution;

/// Errors produced across the TSRE laboratory.
#[derive(Debug, Error)]
pub enum TsreError {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not connected")]
    Disconnected,

    #[error("invalid strength function: {0}")]
    InvalidStrength(String),

    #[error("matrix is not a proper rotation: {0}")]
    InvalidRotation(String),

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (residuals {residual0:.3e}, {residual1:.3e})"
    )]
    Convergence {
        iterations: usize,
        residual0: f64,
        residual1: f64,
        /// Best iterates at the point of failure.
        best: Box<GroundSolution>,
    },

    #[error("state is not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("boundary mismatch: {0}")]
    BoundaryMismatch(String),

    #[error("excited-state search failed: residual overlap {overlap:.3e} with ground state")]
    ExcitedStateFailure { overlap: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("records span more than one (N, lambda) group: {0}")]
    MixedGroup(String),
}

pub type Result<T> = std::result::Result<T, TsreError>;
