//! Core primitives for partitioned kNN search under separable Bregman
//! divergences.
//!
//! The crate is `no_std` (with `alloc`) and holds the pure algorithmic
//! pieces:
//!
//! - [`divergence`]: per-coordinate generator functions, gradients and
//!   inverse gradients, full and sub-vector distance evaluation.
//! - [`layout`]: dimension permutations and subspace boundaries.
//! - [`transform`]: the tuple/triple transforms and Cauchy upper bounds
//!   used as per-subspace searching bounds.
//! - [`planner`]: the cost model choosing the number of partitions, and
//!   the correlation-based partitioning strategy.
//! - [`balltree`]: Bregman ball trees with sound range queries.
//!
//! Disk layout, index files and the query pipeline live in the companion
//! `bregpart` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod balltree;
pub mod data;
pub mod divergence;
pub mod error;
pub mod layout;
pub mod planner;
pub mod transform;

pub use divergence::{DivergenceKind, DivergenceSpec};
pub use error::CoreError;
pub use layout::PartitionLayout;
