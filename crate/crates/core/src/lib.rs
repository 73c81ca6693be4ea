//! Sparse signal recovery in the sublinear-sparsity regime.
//!
//! This crate implements generalized orthogonal approximate message passing
//! (GOAMP) over linear and 1-bit sign measurements, the deterministic state
//! evolution (SE) recursion that predicts its per-iteration error, the
//! reconstruction-threshold calculator for linear measurements, and the
//! classic baselines (FISTA, OMP, BIHT, GLasso) used for comparison.
//!
//! The sensing matrices are implicit SVD-structured operators
//! `A = U_dct P1 Σ P2 V_dct` with a geometric singular-value profile, applied
//! in O(N log N) through fast orthonormal DCTs.

pub mod baselines;
pub mod dct;
pub mod denoisers;
mod error;
pub mod goamp;
pub mod model;
pub mod operator;
pub mod quad;
pub mod rng;
pub mod se;
pub mod special;

pub use error::{Error, Result};
pub use model::{MeasurementChannel, NonzeroLaw, ProblemInstance, SparseSignal};
pub use operator::{SpectralModel, SvdSensingOperator};
