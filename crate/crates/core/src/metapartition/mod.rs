//! Relation-level partitioning of the HGNN dependency tree.
//!
//! The metatree unrolls the metagraph `k` hops from the target type. Each
//! child of the root roots a sub-metatree; sub-metatrees are packed onto
//! partitions with LPT, duplicate relations inside a partition are dropped and
//! each partition is materialized with complete mono-relation subgraphs.

mod materialize;
mod metatree;
mod persist;
mod plan;
mod split;

pub use materialize::{
    boundary_nodes, cross_partition_edges, cross_relations, edge_cut, materialize_partitions,
    random_node_partition, EdgeCut, HetPartition, NodeKey, NodeOwnership,
};
pub use metatree::{build_metatree, parse_metapaths, Metatree, MetatreeMode, TreeNode};
pub use persist::{load_plan, partition_dir, save_plan, PARTITION_GRAPH, PLAN_MANIFEST};
pub use plan::{
    assign, deduplicate, meta_partition, random_relation_plan, replicate_for_excess_workers,
    PartitionPlan, PartitionSpec, PlanKind, ReplicaInfo,
};
pub use split::{lpt_assign, makespan, split_metatree, SubMetatree, WeightPolicy};
