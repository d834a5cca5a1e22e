//! Analytical data-movement modeling and tile-size optimization for
//! convolution and matrix-multiplication loop nests.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: problem, machine, permutation and tile types with JSON I/O.
//! - [`cost`]: footprints and closed-form data volumes per tile level.
//! - [`pruning`]: the eight equivalence classes of tile-loop orders.
//! - [`nlp`]: a small multi-start constrained minimizer.
//! - [`optimizer`]: min-max multi-level tile selection, integerization and
//!   parallel chunking.
//! - [`sim`]: an exact fully-associative LRU simulator used as ground truth.

pub mod cost;
pub mod error;
pub mod model;
pub mod nlp;
pub mod optimizer;
pub mod pruning;
pub mod sim;

pub use error::{Error, Result};
