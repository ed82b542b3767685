use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::config::CacheConfig;
use crate::cache::{
    allocate_cache, allocate_hotness_only, fill_cache, partition_aware_space, presample_hotness, profile_miss_penalty,
    CacheAllocation, CacheStats, HotnessTable, MissPenaltyProfile,
};
use crate::error::Result;
use crate::hetgraph::{sample_khop, HetGraph, NodeTypeId, RelationId, SampleOptions};
use crate::metapartition::PartitionPlan;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerCacheReport {
    pub worker: usize,
    pub cacheable: Vec<NodeTypeId>,
    pub allocation: CacheAllocation,
    pub stats: CacheStats,
    /// The same budget and trace served by a cache open to every type.
    pub whole_graph: CacheStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheReport {
    pub budget_bytes: u64,
    pub penalty_aware: bool,
    pub profile: MissPenaltyProfile,
    pub workers: Vec<WorkerCacheReport>,
}

impl CacheReport {
    pub fn hit_rate(&self) -> f64 {
        let (h, n) = self
            .workers
            .iter()
            .fold((0, 0), |(h, n), w| (h + w.stats.hits, n + w.stats.hits + w.stats.misses));
        if n == 0 {
            0.0
        } else {
            h as f64 / n as f64
        }
    }

    pub fn penalty_ns(&self) -> f64 {
        self.workers.iter().map(|w| w.stats.penalty_ns).sum()
    }
}

/// Raw feature reads of one worker: deepest-hop sources of the relations it
/// consumes, restricted to types that have a miss-penalty profile.
pub fn leaf_reads(
    g: &HetGraph,
    batch: &[u32],
    fanouts: &[usize],
    seed: u64,
    relations: Option<&BTreeSet<RelationId>>,
    profile: &MissPenaltyProfile,
) -> Result<Vec<(NodeTypeId, u32)>> {
    let blocks = sample_khop(g, batch, fanouts, seed, SampleOptions::default())?;
    let mut out = Vec::new();
    if let Some(last) = blocks.hops.last() {
        for b in &last.blocks {
            if relations.is_some_and(|r| !r.contains(&b.relation)) {
                continue;
            }
            let t = g.relation(b.relation).src;
            if profile.get(t).is_some() {
                out.extend(b.src.iter().map(|&s| (t, s)));
            }
        }
    }
    Ok(out)
}

/// Relations of the deepest links owned by `partition`'s replica group.
fn leaf_relations(plan: &PartitionPlan, partition: usize) -> BTreeSet<RelationId> {
    let g = plan.group_of(partition);
    plan.owned_links(g)
        .into_iter()
        .filter(|&q| plan.tree.nodes[q].depth == plan.tree.k)
        .filter_map(|q| plan.tree.nodes[q].via)
        .collect()
}

fn allocate(
    cfg: &CacheConfig,
    hot: &HotnessTable,
    profile: &MissPenaltyProfile,
    cacheable: Option<&[NodeTypeId]>,
) -> Result<CacheAllocation> {
    if cfg.penalty_aware {
        allocate_cache(cfg.budget_bytes, hot, profile, cacheable)
    } else {
        allocate_hotness_only(cfg.budget_bytes, hot, profile, cacheable)
    }
}

/// Simulates per-worker static caches over the given batches.
///
/// With a plan every worker caches only its partition's space and serves the
/// leaf reads of its own links; without one a single cache serves every read.
pub fn simulate_cache(
    g: &HetGraph,
    plan: Option<&PartitionPlan>,
    batches: &[(Vec<u32>, u64)],
    fanouts: &[usize],
    cfg: &CacheConfig,
    seed: u64,
) -> Result<CacheReport> {
    let profile = profile_miss_penalty(&cfg.cost, &g.features)?;
    let hot = presample_hotness(g, fanouts, cfg.presample_epochs, batches.first().map_or(1, |b| b.0.len().max(1)), seed)?;
    let all: Vec<NodeTypeId> = profile.types.iter().map(|p| p.ntype).collect();
    let workers = plan.map_or(1, PartitionPlan::num_partitions);
    let mut out = Vec::with_capacity(workers);
    for w in 0..workers {
        let (cacheable, rels): (Vec<NodeTypeId>, Option<BTreeSet<RelationId>>) = match plan {
            Some(p) => (
                all.iter().copied().filter(|&t| partition_aware_space(p, w, t)).collect(),
                Some(leaf_relations(p, w)),
            ),
            None => (all.clone(), None),
        };
        let mut trace = Vec::new();
        for (batch, bseed) in batches {
            let slice = match plan {
                Some(p) => &batch[p.partitions[w].replica.slice(batch.len())],
                None => &batch[..],
            };
            if !slice.is_empty() {
                trace.extend(leaf_reads(g, slice, fanouts, *bseed, rels.as_ref(), &profile)?);
            }
        }
        let serve = |space: &[NodeTypeId]| -> Result<(CacheAllocation, CacheStats)> {
            if !space.iter().any(|&t| hot.total(t) > 0) {
                let empty = CacheAllocation {
                    budget: cfg.budget_bytes,
                    types: Vec::new(),
                };
                return Ok((empty, miss_all(&trace, &profile)));
            }
            let a = allocate(cfg, &hot, &profile, Some(space))?;
            let mut c = fill_cache(&a, &hot, &profile, &cfg.cost, None, w, workers)?;
            c.serve(&trace)?;
            Ok((a, c.stats()))
        };
        let (allocation, stats) = serve(&cacheable)?;
        let whole = serve(&all)?.1;
        out.push(WorkerCacheReport {
            worker: w,
            cacheable,
            allocation,
            stats,
            whole_graph: whole,
        });
    }
    Ok(CacheReport {
        budget_bytes: cfg.budget_bytes,
        penalty_aware: cfg.penalty_aware,
        profile,
        workers: out,
    })
}

/// Stats for a worker with nothing to cache: every read misses.
fn miss_all(trace: &[(NodeTypeId, u32)], profile: &MissPenaltyProfile) -> CacheStats {
    let mut s = CacheStats {
        misses: trace.len() as u64,
        ..Default::default()
    };
    for &(t, _) in trace {
        s.penalty_ns += profile.get(t).map_or(0.0, |p| p.miss_time);
    }
    s
}
