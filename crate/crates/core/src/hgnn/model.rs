use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hetgraph::{mix_seed, HetGraph, NodeTypeId, RelationId};
use crate::metapartition::Metatree;

/// Identifies `W_r^(l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamKey {
    pub relation: RelationId,
    pub layer: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HgnnConfig {
    pub hidden: usize,
    pub num_classes: usize,
    pub seed: u64,
}

/// Per-relation, per-layer linear maps of a k-layer relational GCN.
#[derive(Clone, Debug, PartialEq)]
pub struct HgnnModel {
    pub k: usize,
    pub hidden: usize,
    pub num_classes: usize,
    pub input_dims: Vec<usize>,
    pub weights: BTreeMap<ParamKey, Array2<f64>>,
}

impl HgnnModel {
    /// Glorot-uniform weights for every `(relation, layer)` the tree uses.
    pub fn init(tree: &Metatree, input_dims: &[usize], cfg: HgnnConfig) -> Result<HgnnModel> {
        if cfg.num_classes == 0 {
            return Err(Error::InvalidArgument("num_classes must be positive".into()));
        }
        let mut model = HgnnModel {
            k: tree.k,
            hidden: cfg.hidden,
            num_classes: cfg.num_classes,
            input_dims: input_dims.to_vec(),
            weights: BTreeMap::new(),
        };
        for (key, src) in param_keys(tree) {
            let (rows, cols) = model.shape(key, src);
            let bound = if rows + cols == 0 {
                0.0
            } else {
                (6.0 / (rows + cols) as f64).sqrt()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[
                cfg.seed,
                0x3E16,
                key.relation.0 as u64,
                key.layer as u64,
            ]));
            let w = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..=1.0) * bound);
            model.weights.insert(key, w);
        }
        Ok(model)
    }

    pub fn for_graph(tree: &Metatree, g: &HetGraph, hidden: usize, seed: u64) -> Result<HgnnModel> {
        let dims: Vec<usize> = g.features.types.iter().map(|f| f.dim).collect();
        HgnnModel::init(
            tree,
            &dims,
            HgnnConfig {
                hidden,
                num_classes: g.num_classes,
                seed,
            },
        )
    }

    /// `(rows, cols)` of `W_r^(l)` whose source endpoint type is `src`.
    pub fn shape(&self, key: ParamKey, src: NodeTypeId) -> (usize, usize) {
        let rows = if key.layer == 1 {
            self.input_dims[src.index()]
        } else {
            self.hidden
        };
        let cols = if key.layer == self.k {
            self.num_classes
        } else {
            self.hidden
        };
        (rows, cols)
    }

    pub fn weight(&self, key: ParamKey) -> Result<&Array2<f64>> {
        self.weights
            .get(&key)
            .ok_or_else(|| Error::PlanMismatch(format!("no weight for relation #{} layer {}", key.relation.0, key.layer)))
    }

    pub fn num_params(&self) -> usize {
        self.weights.values().map(|w| w.len()).sum()
    }

    pub fn scaled(&self, factor: f64) -> HgnnModel {
        let mut m = self.clone();
        for w in m.weights.values_mut() {
            w.mapv_inplace(|x| x * factor);
        }
        m
    }

    /// Restriction to the given keys, as held by one worker.
    pub fn shard(&self, keys: &[ParamKey]) -> HgnnModel {
        HgnnModel {
            weights: keys
                .iter()
                .filter_map(|k| self.weights.get(k).map(|w| (*k, w.clone())))
                .collect(),
            ..self.clone()
        }
    }
}

/// Every `(relation, layer)` key used by the tree, with the relation's source type.
pub fn param_keys(tree: &Metatree) -> Vec<(ParamKey, NodeTypeId)> {
    let mut keys = BTreeMap::new();
    for (q, n) in tree.nodes.iter().enumerate() {
        if let Some(r) = n.via {
            keys.insert(
                ParamKey {
                    relation: r,
                    layer: tree.link_layer(q),
                },
                n.ntype,
            );
        }
    }
    keys.into_iter().collect()
}

/// Gradients of the loss: dense per weight, sparse rows per learnable type.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    pub weights: BTreeMap<ParamKey, Array2<f64>>,
    pub learnable: BTreeMap<NodeTypeId, BTreeMap<u32, Array1<f64>>>,
}

impl Gradients {
    pub fn add_weight(&mut self, key: ParamKey, g: &Array2<f64>) {
        match self.weights.get_mut(&key) {
            Some(acc) => *acc += g,
            None => {
                self.weights.insert(key, g.clone());
            }
        }
    }

    pub fn add_row(&mut self, t: NodeTypeId, id: u32, g: ndarray::ArrayView1<f64>) {
        let rows = self.learnable.entry(t).or_default();
        match rows.get_mut(&id) {
            Some(acc) => *acc += &g,
            None => {
                rows.insert(id, g.to_owned());
            }
        }
    }

    /// Elementwise sum with another gradient set.
    pub fn merge(&mut self, other: &Gradients) {
        for (k, g) in &other.weights {
            self.add_weight(*k, g);
        }
        for (t, rows) in &other.learnable {
            for (id, g) in rows {
                self.add_row(*t, *id, g.view());
            }
        }
    }

    /// Largest absolute difference over the union of entries (missing = 0).
    pub fn max_abs_diff(&self, other: &Gradients) -> f64 {
        let mut worst = 0.0f64;
        let mut keys: Vec<ParamKey> = self.weights.keys().chain(other.weights.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        for k in keys {
            let d = match (self.weights.get(&k), other.weights.get(&k)) {
                (Some(a), Some(b)) if a.dim() == b.dim() => (a - b).iter().fold(0.0f64, |m, x| m.max(x.abs())),
                (Some(a), None) | (None, Some(a)) => a.iter().fold(0.0f64, |m, x| m.max(x.abs())),
                _ => f64::INFINITY,
            };
            worst = worst.max(d);
        }
        let empty = BTreeMap::new();
        let mut types: Vec<NodeTypeId> = self.learnable.keys().chain(other.learnable.keys()).copied().collect();
        types.sort_unstable();
        types.dedup();
        for t in types {
            let (a, b) = (self.learnable.get(&t).unwrap_or(&empty), other.learnable.get(&t).unwrap_or(&empty));
            let mut ids: Vec<u32> = a.keys().chain(b.keys()).copied().collect();
            ids.sort_unstable();
            ids.dedup();
            for id in ids {
                let d = match (a.get(&id), b.get(&id)) {
                    (Some(x), Some(y)) => (x - y).iter().fold(0.0f64, |m, v| m.max(v.abs())),
                    (Some(x), None) | (None, Some(x)) => x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                    (None, None) => 0.0,
                };
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn check_finite(&self) -> Result<()> {
        for (k, g) in &self.weights {
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient(format!("relation #{} layer {}", k.relation.0, k.layer)));
            }
        }
        for (t, rows) in &self.learnable {
            for (id, g) in rows {
                if g.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFiniteGradient(format!("learnable row {id} of type #{}", t.0)));
                }
            }
        }
        Ok(())
    }
}
