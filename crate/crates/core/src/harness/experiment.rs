use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cachesim::{simulate_cache, CacheReport};
use super::config::{ExperimentConfig, Partitioner};
use crate::error::{Error, Result};
use crate::hetgraph::{build_metagraph, epoch_batches, mix_seed, HetGraph, NodeTypeId};
use crate::hgnn::{HgnnModel, LearnableTables};
use crate::metapartition::{
    build_metatree, load_plan, materialize_partitions, meta_partition, random_node_partition, random_relation_plan,
    MetatreeMode, PartitionPlan, PlanKind,
};
use crate::raf_exec::{
    check_comm_bounds, check_equivalence, Accounting, CommStats, CommVerdict, Engine, EquivalenceReport,
    ExecutionReport, RafCluster, Sampling, VanillaCluster,
};

pub const STATS_SCHEMA_VERSION: u32 = 1;
pub const STATS_FILE: &str = "stats.json";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Equivalence diffs above this fail the run.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub name: String,
    pub node_types: usize,
    pub relations: usize,
    pub nodes: usize,
    pub edges: usize,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub id: usize,
    pub relations: Vec<String>,
    pub node_types: Vec<String>,
    pub weight: u64,
    pub boundary: usize,
    pub replica_of: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub kind: String,
    pub partitions: Vec<PartitionSummary>,
    /// Node types whose ids may cross workers.
    pub boundary_types: Vec<String>,
    pub cross_edges: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub epoch: usize,
    pub batch: usize,
    pub designated: Option<usize>,
    pub size: usize,
    pub loss: f64,
    pub cross_bytes: u64,
    pub bytes_by_kind: BTreeMap<String, u64>,
    pub verdict: CommVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub batches: usize,
    pub mean_loss: f64,
    pub cross_bytes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub message_bound: bool,
    pub boundary_bound: Option<bool>,
    pub confinement: Option<bool>,
    pub equivalence: Option<bool>,
    pub violations: Vec<String>,
    pub passed: bool,
}

/// Everything a run reports; serialises deterministically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub graph: GraphSummary,
    pub plan: PlanSummary,
    pub batches: Vec<BatchStats>,
    pub epochs: Vec<EpochStats>,
    pub comm: CommStats,
    pub cache: Option<CacheReport>,
    pub equivalence: Option<EquivalenceReport>,
    pub verdicts: Verdicts,
}

impl RunStats {
    pub fn total_cross_bytes(&self) -> u64 {
        self.batches.iter().map(|b| b.cross_bytes).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Hex SHA-256 of the stats JSON.
    pub fn digest(&self) -> Result<String> {
        let json = self.to_json()?;
        Ok(Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn summary_row(&self) -> SummaryRow {
        let last = self.epochs.last();
        SummaryRow {
            name: self.config.name.clone(),
            graph: self.graph.name.clone(),
            engine: engine_name(self.config.engine).into(),
            partitioner: partitioner_name(self.config.partitioner).into(),
            parts: self.config.parts,
            fanouts: self
                .config
                .fanouts
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("-"),
            batches: self.batches.len(),
            final_loss: last.map_or(f64::NAN, |e| e.mean_loss),
            cross_bytes: self.total_cross_bytes(),
            bytes_per_batch: if self.batches.is_empty() {
                0.0
            } else {
                self.total_cross_bytes() as f64 / self.batches.len() as f64
            },
            cache_hit_rate: self.cache.as_ref().map(CacheReport::hit_rate),
            passed: self.verdicts.passed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub graph: String,
    pub engine: String,
    pub partitioner: String,
    pub parts: usize,
    pub fanouts: String,
    pub batches: usize,
    pub final_loss: f64,
    pub cross_bytes: u64,
    pub bytes_per_batch: f64,
    pub cache_hit_rate: Option<f64>,
    pub passed: bool,
}

pub fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Raf => "raf",
        Engine::Vanilla => "vanilla",
    }
}

pub fn partitioner_name(p: Partitioner) -> &'static str {
    match p {
        Partitioner::Meta => "meta",
        Partitioner::RandomNode => "random-node",
        Partitioner::RandomRelation => "random-relation",
    }
}

fn summarize_graph(name: String, g: &HetGraph) -> GraphSummary {
    GraphSummary {
        name,
        node_types: g.num_node_types(),
        relations: g.relations.len(),
        nodes: g.num_nodes(),
        edges: g.num_edges(),
        target: g.type_name(g.target).to_string(),
    }
}

fn type_names(g: &HetGraph, types: &[NodeTypeId]) -> Vec<String> {
    types.iter().map(|&t| g.type_name(t).to_string()).collect()
}

/// The relation-level plan for a RAF run, loaded or built.
pub fn build_plan(cfg: &ExperimentConfig, g: &HetGraph) -> Result<PartitionPlan> {
    if let Some(dir) = &cfg.plan_dir {
        let (plan, _) = load_plan(dir)?;
        if plan.tree.k != cfg.k() {
            return Err(Error::PlanMismatch(format!(
                "saved plan has depth {} but {} fanouts were given",
                plan.tree.k,
                cfg.k()
            )));
        }
        return Ok(plan);
    }
    let m = build_metagraph(g);
    match cfg.partitioner {
        Partitioner::RandomRelation => {
            let tree = build_metatree(&m, g.target, MetatreeMode::Bfs(cfg.k()))?;
            random_relation_plan(&m, &tree, cfg.parts, cfg.seed)
        }
        _ => meta_partition(&m, g.target, MetatreeMode::Bfs(cfg.k()), cfg.parts, cfg.weight_policy),
    }
}

/// `(batch, sampling seed)` per epoch, capped by `max_batches`.
pub fn schedule(cfg: &ExperimentConfig, g: &HetGraph) -> Vec<Vec<(Vec<u32>, u64)>> {
    let targets: Vec<u32> = (0..g.node_count(g.target) as u32).collect();
    (0..cfg.epochs)
        .map(|e| {
            let mut b = epoch_batches(&targets, cfg.batch_size, cfg.seed, e as u64);
            if let Some(m) = cfg.max_batches {
                b.truncate(m);
            }
            b.into_iter()
                .enumerate()
                .map(|(i, batch)| (batch, mix_seed(&[cfg.seed, 0x5A3, e as u64, i as u64])))
                .collect()
        })
        .collect()
}

enum Cluster {
    Raf(Box<RafCluster>),
    Vanilla(Box<VanillaCluster>),
}

impl Cluster {
    fn run(&mut self, batch: &[u32], seed: u64) -> Result<ExecutionReport> {
        match self {
            Cluster::Raf(c) => c.run_batch(batch, Sampling::Fresh { seed }),
            Cluster::Vanilla(c) => c.run_batch(batch, Sampling::Fresh { seed }),
        }
    }
}

/// Partitions, optionally simulates the cache, and trains.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunStats> {
    cfg.validate()?;
    let g = cfg.graph.load(cfg.seed)?;
    run_on_graph(cfg, &g)
}

/// [`run_experiment`] on an already loaded graph.
pub fn run_on_graph(cfg: &ExperimentConfig, g: &HetGraph) -> Result<RunStats> {
    cfg.validate()?;
    let acct = Accounting::with_width(cfg.elem_width)?;
    let plan = build_plan(cfg, g)?;
    let model = HgnnModel::for_graph(&plan.tree, g, cfg.hidden, cfg.seed)?;
    let tables = LearnableTables::for_graph(g, cfg.seed, cfg.adam, None);
    let sched = schedule(cfg, g);

    let (mut cluster, plan_summary) = match cfg.engine {
        Engine::Raf => {
            let mut c = RafCluster::new(g, &plan, &model, &tables, cfg.adam, &cfg.fanouts, acct)?;
            c.designated = cfg.designated;
            let parts = materialize_partitions(g, &plan)?;
            let summary = PlanSummary {
                kind: match plan.kind {
                    PlanKind::Meta => "meta".into(),
                    PlanKind::RandomRelation => "random-relation".into(),
                },
                partitions: plan
                    .partitions
                    .iter()
                    .zip(&parts)
                    .map(|(s, p)| PartitionSummary {
                        id: s.id,
                        relations: s.relations.iter().map(|&r| g.relation_label(r)).collect(),
                        node_types: type_names(g, &p.node_types),
                        weight: s.weight,
                        boundary: c.boundary[s.id],
                        replica_of: s.replica.is_replica().then_some(s.replica.group),
                    })
                    .collect(),
                boundary_types: type_names(g, &c.boundary_types),
                cross_edges: c.cross_edges,
            };
            (Cluster::Raf(Box::new(c)), summary)
        }
        Engine::Vanilla => {
            let own = random_node_partition(g, cfg.parts, cfg.seed)?;
            let c = VanillaCluster::new(g, &plan.tree, own, &model, &tables, cfg.adam, &cfg.fanouts, acct)?;
            let summary = PlanSummary {
                kind: "random-node".into(),
                partitions: (0..cfg.parts)
                    .map(|i| PartitionSummary {
                        id: i,
                        relations: plan.tree.unique_relations().iter().map(|&r| g.relation_label(r)).collect(),
                        node_types: g.node_types.iter().map(|t| t.name.clone()).collect(),
                        weight: g
                            .node_types
                            .iter()
                            .enumerate()
                            .map(|(t, _)| c.ownership.local_nodes(NodeTypeId(t as u16), i).len() as u64)
                            .sum(),
                        boundary: c.boundary[i],
                        replica_of: None,
                    })
                    .collect(),
                boundary_types: boundary_types_of_cut(g, &c),
                cross_edges: Some(c.cross_edges),
            };
            (Cluster::Vanilla(Box::new(c)), summary)
        }
    };

    let equivalence = match (cfg.check_equivalence, sched.iter().flatten().next()) {
        (true, Some((batch, seed))) => {
            let eq_plan = if cfg.engine == Engine::Raf {
                plan.clone()
            } else {
                let m = build_metagraph(g);
                meta_partition(&m, g.target, MetatreeMode::Bfs(cfg.k()), cfg.parts, cfg.weight_policy)?
            };
            Some(check_equivalence(g, &eq_plan, &model, &tables, batch, &cfg.fanouts, *seed)?)
        }
        _ => None,
    };

    let mut batches = Vec::new();
    let mut epochs = Vec::new();
    let mut comm = CommStats::default();
    let mut verdicts = Verdicts {
        message_bound: true,
        ..Default::default()
    };
    for (e, epoch) in sched.iter().enumerate() {
        let (mut loss, mut bytes) = (0.0, 0);
        for (i, (batch, seed)) in epoch.iter().enumerate() {
            let r = cluster.run(batch, *seed)?;
            let verdict = check_comm_bounds(&r);
            verdicts.message_bound &= verdict.message_bound;
            verdicts.boundary_bound = merge_opt(verdicts.boundary_bound, verdict.boundary_bound);
            verdicts.confinement = merge_opt(verdicts.confinement, verdict.confinement);
            for v in &verdict.violations {
                verdicts.violations.push(format!("epoch {e} batch {i}: {v}"));
            }
            comm.merge(&r.stats);
            let cross = r.cross_bytes();
            loss += r.loss;
            bytes += cross;
            batches.push(BatchStats {
                epoch: e,
                batch: i,
                designated: r.designated,
                size: r.batch_size,
                loss: r.loss,
                cross_bytes: cross,
                bytes_by_kind: r.stats.by_kind.iter().map(|(k, t)| (k.clone(), t.bytes)).collect(),
                verdict,
            });
        }
        epochs.push(EpochStats {
            epoch: e,
            batches: epoch.len(),
            mean_loss: if epoch.is_empty() { f64::NAN } else { loss / epoch.len() as f64 },
            cross_bytes: bytes,
        });
    }
    if let Some(eq) = &equivalence {
        let ok = eq.max_diff() <= EQUIVALENCE_TOLERANCE;
        if !ok {
            verdicts.violations.push(format!("engines differ by {:e}", eq.max_diff()));
        }
        verdicts.equivalence = Some(ok);
    }
    verdicts.passed = verdicts.message_bound
        && verdicts.boundary_bound != Some(false)
        && verdicts.confinement != Some(false)
        && verdicts.equivalence != Some(false);

    let cache = match &cfg.cache {
        Some(cc) => {
            let flat: Vec<(Vec<u32>, u64)> = sched.iter().flatten().cloned().collect();
            let p = (cfg.engine == Engine::Raf).then_some(&plan);
            Some(simulate_cache(g, p, &flat, &cfg.fanouts, cc, cfg.seed)?)
        }
        None => None,
    };

    Ok(RunStats {
        schema_version: STATS_SCHEMA_VERSION,
        config: cfg.clone(),
        graph: summarize_graph(cfg.graph.label(), g),
        plan: plan_summary,
        batches,
        epochs,
        comm,
        cache,
        equivalence,
        verdicts,
    })
}

fn merge_opt(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x && y),
    }
}

fn boundary_types_of_cut(g: &HetGraph, c: &VanillaCluster) -> Vec<String> {
    let mut types = std::collections::BTreeSet::new();
    for &r in &c.tree.unique_relations() {
        let rd = &g.relations[r.index()];
        let (st, dt) = (rd.relation.src, rd.relation.dst);
        if rd.adj.edges().any(|(s, d)| c.ownership.owner_of(st, s) != c.ownership.owner_of(dt, d)) {
            types.insert(st);
            types.insert(dt);
        }
    }
    type_names(g, &types.into_iter().collect::<Vec<_>>())
}

/// Writes `stats.json` and `summary.csv` into `dir`; returns their paths.
pub fn write_reports(stats: &RunStats, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let json = dir.join(STATS_FILE);
    std::fs::write(&json, stats.to_json()?)?;
    let csv_path = dir.join(SUMMARY_FILE);
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.serialize(stats.summary_row())?;
    w.flush()?;
    Ok((json, csv_path))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineBytes {
    pub label: String,
    pub engine: Engine,
    pub partitioner: Partitioner,
    pub per_batch: Vec<u64>,
    pub per_epoch: Vec<u64>,
    pub total: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub graph: String,
    pub parts: usize,
    pub fanouts: Vec<usize>,
    /// vanilla-random, raf-random, raf-meta.
    pub rows: Vec<EngineBytes>,
    /// `bytes(raf-meta) ≤ bytes(raf-random) ≤ bytes(vanilla-random)`.
    pub monotone: bool,
}

impl Comparison {
    pub fn total(&self, label: &str) -> Option<u64> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.total)
    }
}

/// Runs the same schedule under vanilla-random, raf-random and raf-meta.
pub fn compare_engines(cfg: &ExperimentConfig) -> Result<Comparison> {
    let g = cfg.graph.load(cfg.seed)?;
    compare_on_graph(cfg, &g)
}

pub fn compare_on_graph(cfg: &ExperimentConfig, g: &HetGraph) -> Result<Comparison> {
    let variants = [
        ("vanilla-random", Engine::Vanilla, Partitioner::RandomNode),
        ("raf-random", Engine::Raf, Partitioner::RandomRelation),
        ("raf-meta", Engine::Raf, Partitioner::Meta),
    ];
    let mut rows = Vec::new();
    for (label, engine, partitioner) in variants {
        let c = ExperimentConfig {
            engine,
            partitioner,
            cache: None,
            check_equivalence: false,
            plan_dir: None,
            ..cfg.clone()
        };
        let s = run_on_graph(&c, g)?;
        rows.push(EngineBytes {
            label: label.into(),
            engine,
            partitioner,
            per_batch: s.batches.iter().map(|b| b.cross_bytes).collect(),
            per_epoch: s.epochs.iter().map(|e| e.cross_bytes).collect(),
            total: s.total_cross_bytes(),
        });
    }
    let monotone = rows[2].total <= rows[1].total && rows[1].total <= rows[0].total;
    Ok(Comparison {
        graph: cfg.graph.label(),
        parts: cfg.parts,
        fanouts: cfg.fanouts.clone(),
        rows,
        monotone,
    })
}
