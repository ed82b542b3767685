use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::alloc::CacheAllocation;
use super::cost::{CostModel, MissPenaltyProfile, TypePenalty};
use super::hotness::HotnessTable;
use crate::error::{Error, Result};
use crate::hetgraph::NodeTypeId;
use crate::hgnn::{AdamConfig, LearnableFeatureTable, LearnableTables};
use crate::metapartition::{PartitionPlan, PlanKind};

/// A learnable row with its Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct RowState {
    pub weights: Array1<f64>,
    pub m: Array1<f64>,
    pub v: Array1<f64>,
}

/// Learnable rows of one type split between the cache and the host store.
/// Every row lives in exactly one of the two.
#[derive(Clone, Debug, PartialEq)]
pub struct TieredLearnableStore {
    pub ntype: NodeTypeId,
    pub dim: usize,
    pub workers: usize,
    pub step: u64,
    pub config: AdamConfig,
    pub cached: BTreeMap<u32, RowState>,
    pub host: BTreeMap<u32, RowState>,
}

impl TieredLearnableStore {
    pub fn from_table(table: &LearnableFeatureTable, cached_ids: &[u32], workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Cache("worker count must be positive".into()));
        }
        let wanted: BTreeSet<u32> = cached_ids.iter().copied().collect();
        if wanted.len() != cached_ids.len() {
            return Err(Error::Cache("cached id list has duplicates".into()));
        }
        let mut cached = BTreeMap::new();
        let mut host = BTreeMap::new();
        for r in 0..table.weights.nrows() {
            let row = RowState {
                weights: table.weights.row(r).to_owned(),
                m: table.m.row(r).to_owned(),
                v: table.v.row(r).to_owned(),
            };
            if wanted.contains(&(r as u32)) {
                cached.insert(r as u32, row);
            } else {
                host.insert(r as u32, row);
            }
        }
        if cached.len() != wanted.len() {
            return Err(Error::Cache("cached id out of range".into()));
        }
        Ok(TieredLearnableStore {
            ntype: table.ntype,
            dim: table.dim(),
            workers,
            step: table.step,
            config: table.config,
            cached,
            host,
        })
    }

    /// Worker holding a cached row; `None` for host-resident rows.
    pub fn rank_of(&self, id: u32) -> Option<usize> {
        self.cached.contains_key(&id).then_some(id as usize % self.workers)
    }

    pub fn is_cached(&self, id: u32) -> bool {
        self.cached.contains_key(&id)
    }

    pub fn row(&self, id: u32) -> Option<ArrayView1<'_, f64>> {
        self.cached
            .get(&id)
            .or_else(|| self.host.get(&id))
            .map(|r| r.weights.view())
    }

    /// Starts a new optimizer step shared by every row touched until the next call.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    /// Adam update in place; returns whether the row was cache-resident.
    pub fn apply(&mut self, id: u32, grad: &[f64]) -> Result<bool> {
        if grad.len() != self.dim {
            return Err(Error::DimMismatch(format!("gradient of {} entries for dim {}", grad.len(), self.dim)));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient(format!("learnable row {id}")));
        }
        let step = self.step.max(1);
        let hit = self.cached.contains_key(&id);
        let row = if hit { self.cached.get_mut(&id) } else { self.host.get_mut(&id) }
            .ok_or_else(|| Error::Cache(format!("learnable row {id} not found")))?;
        self.config
            .step_row(step, row.weights.view_mut(), row.m.view_mut(), row.v.view_mut(), grad);
        Ok(hit)
    }

    pub fn residency_ok(&self, rows: usize) -> bool {
        self.cached.keys().all(|k| !self.host.contains_key(k)) && self.cached.len() + self.host.len() == rows
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeCacheStats {
    pub ntype: NodeTypeId,
    pub capacity: usize,
    pub cached: usize,
    pub hits: u64,
    pub misses: u64,
    pub hit_rate: f64,
    pub penalty_ns: f64,
    pub peer_ns: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CacheStats {
    pub types: Vec<TypeCacheStats>,
    pub hits: u64,
    pub misses: u64,
    pub hit_rate: f64,
    pub penalty_ns: f64,
    pub peer_ns: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct TypeCache {
    penalty: TypePenalty,
    capacity: usize,
    cached: BTreeSet<u32>,
    hits: u64,
    misses: u64,
    penalty_ns: f64,
    peer_ns: f64,
}

/// Static per-worker cache filled with the hottest nodes of each type.
#[derive(Clone, Debug, PartialEq)]
pub struct CacheState {
    pub cost: CostModel,
    pub worker: usize,
    pub workers: usize,
    types: BTreeMap<NodeTypeId, TypeCache>,
    pub learnable: BTreeMap<NodeTypeId, TieredLearnableStore>,
}

/// Caches the `capacity` hottest nodes of every allocated type; learnable
/// rows named in `tables` move into the cache with their optimizer state.
pub fn fill_cache(
    alloc: &CacheAllocation,
    hotness: &HotnessTable,
    profile: &MissPenaltyProfile,
    cost: &CostModel,
    tables: Option<&LearnableTables>,
    worker: usize,
    workers: usize,
) -> Result<CacheState> {
    cost.validate()?;
    if workers == 0 || worker >= workers {
        return Err(Error::Cache(format!("worker {worker} of {workers}")));
    }
    let mut types = BTreeMap::new();
    let mut learnable = BTreeMap::new();
    for a in &alloc.types {
        let penalty = profile
            .get(a.ntype)
            .cloned()
            .ok_or_else(|| Error::Cache(format!("no miss-penalty profile for type #{}", a.ntype.0)))?;
        let ranked = hotness.ranked(a.ntype);
        let cached: Vec<u32> = ranked.into_iter().take(a.capacity).collect();
        if penalty.learnable {
            if let Some(t) = tables.and_then(|t| t.get(a.ntype)) {
                learnable.insert(a.ntype, TieredLearnableStore::from_table(t, &cached, workers)?);
            }
        }
        types.insert(
            a.ntype,
            TypeCache {
                penalty,
                capacity: a.capacity,
                cached: cached.into_iter().collect(),
                hits: 0,
                misses: 0,
                penalty_ns: 0.0,
                peer_ns: 0.0,
            },
        );
    }
    Ok(CacheState {
        cost: *cost,
        worker,
        workers,
        types,
        learnable,
    })
}

impl CacheState {
    fn entry(&mut self, t: NodeTypeId) -> Result<&mut TypeCache> {
        self.types
            .get_mut(&t)
            .ok_or_else(|| Error::Cache(format!("type #{} is not cacheable on worker {}", t.0, self.worker)))
    }

    pub fn is_cached(&self, t: NodeTypeId, id: u32) -> bool {
        self.types.get(&t).is_some_and(|c| c.cached.contains(&id))
    }

    pub fn cached_ids(&self, t: NodeTypeId) -> Vec<u32> {
        self.types.get(&t).map_or_else(Vec::new, |c| c.cached.iter().copied().collect())
    }

    fn peer_cost(&self, id: u32, record: u64) -> f64 {
        if self.workers > 1 && id as usize % self.workers != self.worker {
            self.cost.peer_ns_per_byte * record as f64
        } else {
            0.0
        }
    }

    /// Feature read; a miss costs one record transfer.
    pub fn lookup(&mut self, t: NodeTypeId, id: u32) -> Result<bool> {
        let cost = self.cost;
        let learnable_placed = self.learnable.contains_key(&t);
        let (hit, record) = {
            let c = self.entry(t)?;
            (c.cached.contains(&id), c.penalty.record_bytes)
        };
        let peer = if hit && learnable_placed { self.peer_cost(id, record) } else { 0.0 };
        let c = self.entry(t)?;
        if hit {
            c.hits += 1;
            c.peer_ns += peer;
        } else {
            c.misses += 1;
            c.penalty_ns += if c.penalty.learnable {
                cost.learnable_read(c.penalty.feature_bytes)
            } else {
                c.penalty.miss_time
            };
        }
        Ok(hit)
    }

    /// Learnable update: in place on a hit, read plus write-back penalty on a miss.
    pub fn update(&mut self, t: NodeTypeId, id: u32, grad: &[f64]) -> Result<bool> {
        let (learnable, record) = {
            let c = self.entry(t)?;
            (c.penalty.learnable, c.penalty.record_bytes)
        };
        if !learnable {
            return Err(Error::Cache(format!("update on read-only type #{}", t.0)));
        }
        let hit = match self.learnable.get_mut(&t) {
            Some(store) => store.apply(id, grad)?,
            None => self.is_cached(t, id),
        };
        let peer = if hit { self.peer_cost(id, record) } else { 0.0 };
        let c = self.entry(t)?;
        if hit {
            c.hits += 1;
            c.peer_ns += peer;
        } else {
            c.misses += 1;
            c.penalty_ns += c.penalty.miss_time;
        }
        Ok(hit)
    }

    /// One training access: a read for read-only types, a read-modify-write for learnable ones.
    pub fn access(&mut self, t: NodeTypeId, id: u32) -> Result<bool> {
        let c = self.entry(t)?;
        if !c.penalty.learnable {
            return self.lookup(t, id);
        }
        let hit = c.cached.contains(&id);
        if hit {
            c.hits += 1;
        } else {
            c.misses += 1;
            c.penalty_ns += c.penalty.miss_time;
        }
        Ok(hit)
    }

    pub fn serve(&mut self, trace: &[(NodeTypeId, u32)]) -> Result<()> {
        for &(t, id) in trace {
            self.access(t, id)?;
        }
        Ok(())
    }

    pub fn reset_counters(&mut self) {
        for c in self.types.values_mut() {
            c.hits = 0;
            c.misses = 0;
            c.penalty_ns = 0.0;
            c.peer_ns = 0.0;
        }
    }

    pub fn stats(&self) -> CacheStats {
        let mut s = CacheStats::default();
        for (t, c) in &self.types {
            let n = c.hits + c.misses;
            s.types.push(TypeCacheStats {
                ntype: *t,
                capacity: c.capacity,
                cached: c.cached.len(),
                hits: c.hits,
                misses: c.misses,
                hit_rate: if n == 0 { 0.0 } else { c.hits as f64 / n as f64 },
                penalty_ns: c.penalty_ns,
                peer_ns: c.peer_ns,
            });
            s.hits += c.hits;
            s.misses += c.misses;
            s.penalty_ns += c.penalty_ns;
            s.peer_ns += c.peer_ns;
        }
        let n = s.hits + s.misses;
        s.hit_rate = if n == 0 { 0.0 } else { s.hits as f64 / n as f64 };
        s
    }

    /// Every learnable row is in exactly one store and each cached set matches its placement.
    pub fn check_residency(&self) -> Result<()> {
        for (t, store) in &self.learnable {
            let c = &self.types[t];
            let rows = store.cached.len() + store.host.len();
            if !store.residency_ok(rows) {
                return Err(Error::Cache(format!("type #{} has a row in both stores", t.0)));
            }
            if store.cached.keys().copied().collect::<BTreeSet<u32>>() != c.cached {
                return Err(Error::Cache(format!("type #{} cache set and row store disagree", t.0)));
            }
        }
        Ok(())
    }
}

/// Whether `partition` may cache nodes of type `t`. Meta plans confine the
/// space to the leaf types read through the partition's own links; relation
/// plans to the endpoint types of its relations.
pub fn partition_aware_space(plan: &PartitionPlan, partition: usize, t: NodeTypeId) -> bool {
    if plan.num_partitions() == 1 {
        return true;
    }
    let Some(spec) = plan.partitions.get(partition) else {
        return false;
    };
    match plan.kind {
        PlanKind::Meta => plan.leaf_types(partition).contains(&t),
        PlanKind::RandomRelation => spec.node_types.contains(&t),
    }
}
