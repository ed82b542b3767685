//! Heterogeneous-graph partitioning and distributed HGNN training simulation.
//!
//! The crate is organised bottom-up:
//!
//! * [`hetgraph`] – typed graph model, metagraph, reverse relations, k-hop sampling
//!   and the on-disk container format.
//! * [`metapartition`] – metatree construction, sub-metatree splitting, LPT
//!   assignment, deduplication and partition materialisation.
//! * [`hgnn`] – per-relation mean aggregation, cross-relation sum, loss,
//!   backpropagation and Adam (dense and sparse-row).
//! * [`raf_exec`] – simulated workers executing relation-aggregation-first
//!   training and the data-parallel baseline, with byte accounting.
//! * [`cache`] – hotness pre-sampling, miss-penalty profiling, proportional
//!   cache allocation and a static non-replicative feature cache.
//! * [`harness`] – synthetic datasets, experiment orchestration and reports.

pub mod cache;
pub mod error;
pub mod harness;
pub mod hetgraph;
pub mod hgnn;
pub mod metapartition;
pub mod raf_exec;

pub use error::{Error, Result};
