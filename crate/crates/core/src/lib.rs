//! Online vector balancing with the self-balancing random walk.
//!
//! Vectors of Euclidean norm at most 1 arrive one at a time and each must be
//! signed immediately. The walk in [`walk`] keeps every partial signed sum at
//! sup-norm `O(log(nt/δ))` against an oblivious adversary. Around it sit a
//! sparse Komlós signer ([`komlos`]), the interval and box discrepancy
//! reductions ([`geometry`]), input generators ([`adversaries`]), baselines
//! and exact oracles ([`oracles`]), and a seeded trial runner ([`harness`]).

// `!(x >= 1.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversaries;
pub mod covariance;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod komlos;
pub mod oracles;
pub mod seed;
pub mod stats;
pub mod vector;
pub mod walk;

pub use error::{Error, Result};
pub use vector::{InputVector, Sign, SparseSlice, SparseVec};
pub use walk::{compute_c, run_balance, Mode, WalkConfig, WalkTrace};
