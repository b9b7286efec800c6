//! Numerical laboratory for the two-spin random ensemble (TSRE): random
//! spin-1/2 Hamiltonians on interaction graphs with Gaussian bond matrices
//! and field vectors, invariant in distribution under local SO(3) frame
//! rotations.
//!
//! The crate covers the full pipeline:
//!
//! - [`graph`]: interaction graphs, cycle rank, canonical parameter counts
//! - [`ensemble`]: reproducible sampling of ensemble members
//! - [`gauge`]: the local SO(3) action and orbit-representative forms
//! - [`hamiltonian`]: matrix-free operators on the 2^N spin space
//! - [`eigensolver`]: the lowest two eigenpairs via restarted Lanczos
//! - [`observables`]: entanglement entropy, Schmidt ranks, correlation
//!   fluctuations
//! - [`dmrg`]: matrix-product-state ground-state search for open chains
//! - [`harness`]: ensemble sweeps, statistics, histograms, and scaling fits

pub mod dmrg;
pub mod eigensolver;
pub mod ensemble;
pub mod error;
pub mod gauge;
pub mod graph;
pub mod harness;
pub mod hamiltonian;
pub mod observables;

pub(crate) mod linalg;

pub use error::{Result, TsreError};
