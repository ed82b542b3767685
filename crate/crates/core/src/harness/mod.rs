//! Synthetic datasets, experiment orchestration and reports.
//!
//! A run is described by an [`ExperimentConfig`]; [`run_experiment`] builds
//! the graph and plan, trains for the configured schedule and returns
//! [`RunStats`], whose JSON form is byte-stable for a given config.

mod bundled;
mod cachesim;
mod config;
mod experiment;
mod synthetic;

pub use bundled::{bundled_spec, donor_mini, freebase_mini, igb_mini, mag_mini, BUNDLED_SPECS};
pub use cachesim::{leaf_reads, simulate_cache, CacheReport, WorkerCacheReport};
pub use config::{CacheConfig, ExperimentConfig, GraphSource, Partitioner};
pub use experiment::{
    build_plan, compare_engines, compare_on_graph, engine_name, partitioner_name, run_experiment, run_on_graph,
    schedule, write_reports, BatchStats, Comparison, EngineBytes, EpochStats, GraphSummary, PartitionSummary,
    PlanSummary, RunStats, SummaryRow, Verdicts, EQUIVALENCE_TOLERANCE, STATS_FILE, STATS_SCHEMA_VERSION,
    SUMMARY_FILE,
};
pub use synthetic::{
    gen_synthetic, random_hetgraph, random_spec, DegreeDist, NodeTypeSpec, RandomGraphLimits, RelationSpec,
    SyntheticSpec,
};
