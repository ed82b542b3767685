//! Simulated multi-worker execution.
//!
//! [`RafCluster`] runs relation-aggregation-first training: each worker
//! samples and aggregates the relations it owns and ships partial sums only
//! for nodes combined elsewhere. [`VanillaCluster`] is the data-parallel
//! baseline that fetches remote topology and features instead. Both move
//! every byte through a [`Bus`] so traffic is accounted the same way.

mod checks;
mod message;
mod raf;
mod report;
mod vanilla;

pub use checks::{check_comm_bounds, check_equivalence, CommVerdict, EquivalenceReport};
pub use message::{Accounting, Bus, CommStats, DirectionStats, Message, MessageKind, MessageRecord, Tally};
pub use raf::{run_raf_batch, DesignatedPolicy, RafCluster, RafWorker, Sampling};
pub use report::{Engine, ExecutionReport};
pub use vanilla::{run_vanilla_batch, VanillaCluster};
