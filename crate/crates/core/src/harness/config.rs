use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{bundled_spec, gen_synthetic, SyntheticSpec};
use crate::cache::CostModel;
use crate::error::{Error, Result};
use crate::hetgraph::{load_graph, HetGraph};
use crate::hgnn::AdamConfig;
use crate::metapartition::WeightPolicy;
use crate::raf_exec::{DesignatedPolicy, Engine};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GraphSource {
    /// One of the specs in [`super::BUNDLED_SPECS`], generated from the run seed.
    Bundled { name: String },
    Synthetic { spec: SyntheticSpec },
    /// A graph container written by `gen`.
    File { path: PathBuf },
}

impl GraphSource {
    pub fn label(&self) -> String {
        match self {
            GraphSource::Bundled { name } => name.clone(),
            GraphSource::Synthetic { spec } => spec.name.clone(),
            GraphSource::File { path } => path.display().to_string(),
        }
    }

    pub fn load(&self, seed: u64) -> Result<HetGraph> {
        match self {
            GraphSource::Bundled { name } => {
                let spec = bundled_spec(name).ok_or_else(|| Error::InvalidArgument(format!("no bundled spec `{name}`")))?;
                gen_synthetic(&spec, seed)
            }
            GraphSource::Synthetic { spec } => gen_synthetic(spec, seed),
            GraphSource::File { path } => Ok(load_graph(path)?.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partitioner {
    /// Sub-metatrees packed by LPT.
    Meta,
    /// Each node of each type on a random worker; vanilla engine only.
    RandomNode,
    /// Each tree relation on a random worker; RAF engine only.
    RandomRelation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CacheConfig {
    /// Per-worker budget in bytes.
    pub budget_bytes: u64,
    pub cost: CostModel,
    pub presample_epochs: usize,
    /// Split the budget by visit count times miss penalty rather than visit count alone.
    pub penalty_aware: bool,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            budget_bytes: 1 << 20,
            cost: CostModel::default(),
            presample_epochs: 2,
            penalty_aware: true,
        }
    }
}

/// Everything a run depends on. The number of layers is `fanouts.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    pub graph: GraphSource,
    pub partitioner: Partitioner,
    pub parts: usize,
    pub engine: Engine,
    pub fanouts: Vec<usize>,
    pub hidden: usize,
    pub batch_size: usize,
    pub epochs: usize,
    /// Cap on batches per epoch.
    pub max_batches: Option<usize>,
    pub seed: u64,
    pub designated: DesignatedPolicy,
    pub weight_policy: WeightPolicy,
    pub adam: AdamConfig,
    pub elem_width: u64,
    pub cache: Option<CacheConfig>,
    /// Compare both engines on the first batch.
    pub check_equivalence: bool,
    /// Load a saved plan instead of partitioning.
    pub plan_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "default".into(),
            graph: GraphSource::Bundled { name: "mag-mini".into() },
            partitioner: Partitioner::Meta,
            parts: 2,
            engine: Engine::Raf,
            fanouts: vec![25, 20],
            hidden: 64,
            batch_size: 256,
            epochs: 1,
            max_batches: None,
            seed: 0,
            designated: DesignatedPolicy::RoundRobin,
            weight_policy: WeightPolicy::Unique,
            adam: AdamConfig::default(),
            elem_width: 4,
            cache: None,
            check_equivalence: false,
            plan_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn k(&self) -> usize {
        self.fanouts.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.parts == 0 {
            v.push("parts must be at least 1".to_string());
        }
        if self.fanouts.is_empty() || self.fanouts.contains(&0) {
            v.push("fanouts must be non-empty and positive".into());
        }
        if self.hidden == 0 {
            v.push("hidden dim must be positive".into());
        }
        if self.batch_size == 0 {
            v.push("batch size must be positive".into());
        }
        if ![2, 4, 8].contains(&self.elem_width) {
            v.push(format!("element width {} not in {{2, 4, 8}}", self.elem_width));
        }
        match (self.engine, self.partitioner) {
            (Engine::Raf, Partitioner::RandomNode) => v.push("the raf engine needs a relation-level partitioner".into()),
            (Engine::Vanilla, Partitioner::Meta | Partitioner::RandomRelation) => {
                v.push("the vanilla engine needs the random-node partitioner".into())
            }
            _ => {}
        }
        if let Some(c) = &self.cache {
            if let Err(e) = c.cost.validate() {
                v.push(e.to_string());
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
