//! Static load balancing of unbalanced binary trees by random depth probing.
//!
//! The pipeline: pick a tree level holding at least `p` subtrees, estimate
//! each subtree's node count with random probes ([`estimator`]), lay the
//! estimates out as a cumulative work curve over the dyadic interval
//! `[0, 1]`, invert that curve at `p - 1` equal-work boundaries (re-probing
//! near each boundary as needed), and clip the tree into per-worker subtree
//! sets ([`partitioner`]). [`harness`] times parallel traversals of the
//! result against serial and trivial-split baselines.

// `!(a > b)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod estimator;
pub mod generate;
pub mod harness;
pub mod interval;
pub mod partitioner;
pub mod rng;
pub mod text;
pub mod tree;

pub use config::{BalanceConfig, FitConstants};
pub use error::{Error, Result};
pub use interval::{IntervalLabel, Side};
pub use partitioner::{partition, trivial_partition, PartitionPlan};
pub use tree::{NodeHandle, TreeStore};
