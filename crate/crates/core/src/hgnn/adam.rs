use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayViewMut1, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Gradients, HgnnModel, ParamKey};
use crate::error::{Error, Result};
use crate::hetgraph::{mix_seed, HetGraph, NodeTypeId, StorageKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    /// One bias-corrected Adam step on a single row at step `t`.
    pub fn step_row(&self, t: u64, mut w: ArrayViewMut1<f64>, mut m: ArrayViewMut1<f64>, mut v: ArrayViewMut1<f64>, g: &[f64]) {
        let c1 = 1.0 - self.beta1.powi(t as i32);
        let c2 = 1.0 - self.beta2.powi(t as i32);
        for i in 0..g.len() {
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            w[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

fn ensure_finite<'a>(what: &str, g: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    if g.into_iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteGradient(what.to_string()))
    }
}

/// Adam moments for dense model weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: BTreeMap<ParamKey, Array2<f64>>,
    pub v: BTreeMap<ParamKey, Array2<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            ..Default::default()
        }
    }

    /// One step over every weight of `model`; keys absent from `grads` see a zero gradient.
    pub fn update(&mut self, model: &mut HgnnModel, grads: &Gradients) -> Result<()> {
        for (k, g) in &grads.weights {
            ensure_finite(&format!("relation #{} layer {}", k.relation.0, k.layer), g)?;
        }
        self.step += 1;
        for (key, w) in model.weights.iter_mut() {
            let zero;
            let g = match grads.weights.get(key) {
                Some(g) if g.dim() == w.dim() => g,
                Some(_) => return Err(Error::DimMismatch(format!("gradient for relation #{} layer {}", key.relation.0, key.layer))),
                None => {
                    zero = Array2::zeros(w.dim());
                    &zero
                }
            };
            let m = self.m.entry(*key).or_insert_with(|| Array2::zeros(w.dim()));
            let v = self.v.entry(*key).or_insert_with(|| Array2::zeros(w.dim()));
            let cfg = self.config;
            let c1 = 1.0 - cfg.beta1.powi(self.step as i32);
            let c2 = 1.0 - cfg.beta2.powi(self.step as i32);
            Zip::from(w).and(m).and(v).and(g).for_each(|w, m, v, &g| {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                *w -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
            });
        }
        Ok(())
    }
}

/// Trainable input vectors of one featureless node type with lazy Adam state.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnableFeatureTable {
    pub ntype: NodeTypeId,
    pub weights: Array2<f64>,
    pub m: Array2<f64>,
    pub v: Array2<f64>,
    pub step: u64,
    pub config: AdamConfig,
}

impl LearnableFeatureTable {
    /// Rows drawn uniformly from `[-1/sqrt(d), 1/sqrt(d)]`.
    pub fn init(ntype: NodeTypeId, count: usize, dim: usize, seed: u64, config: AdamConfig) -> Self {
        let bound = if dim == 0 { 0.0 } else { 1.0 / (dim as f64).sqrt() };
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0x7AB1E, ntype.0 as u64]));
        let weights = Array2::from_shape_fn((count, dim), |_| rng.random_range(-1.0..=1.0) * bound);
        LearnableFeatureTable {
            ntype,
            m: Array2::zeros((count, dim)),
            v: Array2::zeros((count, dim)),
            weights,
            step: 0,
            config,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Advances the step counter once and updates only the given rows.
    pub fn apply_sparse(&mut self, rows: &BTreeMap<u32, Array1<f64>>) -> Result<()> {
        for (id, g) in rows {
            if *id as usize >= self.weights.nrows() {
                return Err(Error::InvalidArgument(format!("learnable row {id} out of range")));
            }
            if g.len() != self.dim() {
                return Err(Error::DimMismatch(format!("learnable row {id} gradient has {} entries", g.len())));
            }
            ensure_finite(&format!("learnable row {id} of type #{}", self.ntype.0), g)?;
        }
        self.step += 1;
        for (id, g) in rows {
            let r = *id as usize;
            let gs = g.to_vec();
            self.config.step_row(
                self.step,
                self.weights.row_mut(r),
                self.m.row_mut(r),
                self.v.row_mut(r),
                &gs,
            );
        }
        Ok(())
    }
}

/// Learnable tables keyed by node type.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearnableTables {
    pub tables: BTreeMap<NodeTypeId, LearnableFeatureTable>,
}

impl LearnableTables {
    /// A table for every learnable node type of `g` (restricted to `only` when given).
    pub fn for_graph(g: &HetGraph, seed: u64, config: AdamConfig, only: Option<&[NodeTypeId]>) -> Self {
        let tables = g
            .features
            .types
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == StorageKind::Learnable)
            .map(|(t, f)| (NodeTypeId(t as u16), f.dim))
            .filter(|(t, _)| only.is_none_or(|o| o.contains(t)))
            .map(|(t, dim)| (t, LearnableFeatureTable::init(t, g.node_count(t), dim, seed, config)))
            .collect();
        LearnableTables { tables }
    }

    pub fn get(&self, t: NodeTypeId) -> Option<&LearnableFeatureTable> {
        self.tables.get(&t)
    }

    pub fn apply(&mut self, grads: &Gradients) -> Result<()> {
        let empty = BTreeMap::new();
        for (t, table) in self.tables.iter_mut() {
            table.apply_sparse(grads.learnable.get(t).unwrap_or(&empty))?;
        }
        Ok(())
    }
}
