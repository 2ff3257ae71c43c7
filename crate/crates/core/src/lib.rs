//! Exact arithmetic over the Eulerian number triangle and its boundary.
//!
//! The triangle `<n k>` counts permutations of `[n]` with `k` descents. Read as
//! a graded graph with edge multiplicities `k + 1` and `n - k`, it carries a
//! backward Markov chain whose nonnegative harmonic functions are the
//! solutions of the dual recursion
//!
//! ```text
//! V(n, k) = (k + 1) V(n + 1, k) + (n - k) V(n + 1, k + 1),    V(1, 0) = 1.
//! ```
//!
//! The extreme solutions form a discrete family indexed by [`BoundaryParam`].
//! This crate computes them exactly, reconstructs arbitrary solutions from
//! their left column, decomposes mixtures, and provides the random
//! arrangements (bucket sorting, exchangeable orders) that realize each
//! extreme solution as a law on permutations.
//!
//! Everything here is `no_std` with `alloc`; IO and the command line live in
//! the companion `eulerian-cli` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arith;
pub mod boundary;
pub mod chain;
mod error;
pub mod reconstruct;
pub mod sampler;
pub mod stats;
pub mod triangle;

pub use arith::Rational;
pub use boundary::{BoundaryParam, SolutionArray};
pub use error::{Error, Result};
pub use triangle::{EulerianTable, TriangleIndex};
