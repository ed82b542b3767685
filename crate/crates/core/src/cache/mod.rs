//! Static per-worker feature cache.
//!
//! Nodes are ranked by how often a pre-sampling pass visits them, the cache
//! budget is split across node types by visit count times miss penalty, and
//! each type keeps its hottest nodes. Learnable rows live either in the cache
//! or in the host store, never both.

mod alloc;
mod cost;
mod hotness;
mod state;

pub use alloc::{
    allocate_cache, allocate_hotness_only, proportional_allocation, CacheAllocation, TypeAllocation,
};
pub use cost::{profile_miss_penalty, type_penalty, CostModel, MissPenaltyProfile, TypePenalty};
pub use hotness::{presample_hotness, HotnessTable};
pub use state::{
    fill_cache, partition_aware_space, CacheState, CacheStats, RowState, TieredLearnableStore, TypeCacheStats,
};
