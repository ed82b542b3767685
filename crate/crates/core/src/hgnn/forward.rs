use ndarray::{s, Array2};

use super::aggregate::{expand, mean_rows, mean_rows_backward, relu, relu_backward, LinkSample};
use super::{Gradients, HgnnModel, LearnableTables, ParamKey};
use crate::error::{Error, Result};
use crate::hetgraph::{HetGraph, NeighborSampler, NodeTypeId, StorageKind};
use crate::metapartition::Metatree;

/// Supplies layer-0 rows for nodes at the deepest tree positions.
pub trait FeatureSource {
    fn input_rows(&self, t: NodeTypeId, ids: &[u32]) -> Result<Array2<f64>>;
    fn is_learnable(&self, t: NodeTypeId) -> bool;
}

/// Dense features from a graph plus learnable tables.
#[derive(Clone, Copy, Debug)]
pub struct GraphInputs<'a> {
    pub graph: &'a HetGraph,
    pub tables: &'a LearnableTables,
}

impl FeatureSource for GraphInputs<'_> {
    fn input_rows(&self, t: NodeTypeId, ids: &[u32]) -> Result<Array2<f64>> {
        let f = self.graph.features.get(t);
        let missing = || Error::MissingFeatures(self.graph.type_name(t).to_string());
        let src = match f.kind {
            StorageKind::Dense => f.data.as_ref().ok_or_else(missing)?,
            StorageKind::Learnable => &self.tables.get(t).ok_or_else(missing)?.weights,
            StorageKind::Absent => return Err(missing()),
        };
        let mut out = Array2::zeros((ids.len(), src.ncols()));
        for (i, &id) in ids.iter().enumerate() {
            if id as usize >= src.nrows() {
                return Err(Error::SeedOutOfRange {
                    ntype: self.graph.type_name(t).to_string(),
                    id,
                    count: src.nrows(),
                });
            }
            out.row_mut(i).assign(&src.row(id as usize));
        }
        Ok(out)
    }

    fn is_learnable(&self, t: NodeTypeId) -> bool {
        self.graph.features.get(t).kind == StorageKind::Learnable
    }
}

/// Forward state of one tree position.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionTape {
    pub nodes: Vec<u32>,
    /// Sample of the link into this position from its parent's nodes.
    pub link: Option<LinkSample>,
    /// Mean-aggregated child rows, one per child in combine order.
    pub means: Vec<(usize, Array2<f64>)>,
    /// Pre-activation; `None` at the deepest level.
    pub z: Option<Array2<f64>>,
    pub h: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tape {
    pub batch: Vec<u32>,
    pub positions: Vec<PositionTape>,
}

/// Children of `q` ordered by relation id, the fixed cross-relation reduce order.
pub fn combine_order(tree: &Metatree, q: usize) -> Vec<usize> {
    let mut c = tree.nodes[q].children.clone();
    c.sort_by_key(|&c| (tree.nodes[c].via, c));
    c
}

pub fn output_dim(model: &HgnnModel, layer: usize) -> usize {
    if layer == model.k {
        model.num_classes
    } else {
        model.hidden
    }
}

/// Node lists of every position, sampling top-down from `batch`.
pub fn sample_tree(tree: &Metatree, sampler: &dyn NeighborSampler, batch: &[u32]) -> Result<Vec<(Vec<u32>, Option<LinkSample>)>> {
    let mut out: Vec<(Vec<u32>, Option<LinkSample>)> = Vec::with_capacity(tree.len());
    out.push((batch.to_vec(), None));
    for q in 1..tree.len() {
        let n = &tree.nodes[q];
        let parent = n.parent.expect("non-root has a parent");
        let rel = n.via.expect("non-root has a relation");
        let link = expand(sampler, n.depth, rel, &out[parent].0)?;
        out.push((link.src_nodes.clone(), Some(link)));
    }
    Ok(out)
}

/// Full k-layer forward pass over the metatree for one batch of target nodes.
pub fn forward_vanilla(
    model: &HgnnModel,
    tree: &Metatree,
    sampler: &dyn NeighborSampler,
    inputs: &dyn FeatureSource,
    batch: &[u32],
) -> Result<(Array2<f64>, Tape)> {
    if tree.k != model.k {
        return Err(Error::PlanMismatch(format!("model has {} layers, tree depth {}", model.k, tree.k)));
    }
    let sampled = sample_tree(tree, sampler, batch)?;
    let mut positions: Vec<Option<PositionTape>> = vec![None; tree.len()];
    for q in (0..tree.len()).rev() {
        let node = &tree.nodes[q];
        let (nodes, link) = sampled[q].clone();
        if node.depth == tree.k {
            let h = inputs.input_rows(node.ntype, &nodes)?;
            positions[q] = Some(PositionTape {
                nodes,
                link,
                means: Vec::new(),
                z: None,
                h,
            });
            continue;
        }
        let layer = tree.k - node.depth;
        let mut z = Array2::zeros((nodes.len(), output_dim(model, layer)));
        let mut means = Vec::new();
        for c in combine_order(tree, q) {
            let child = positions[c].as_ref().expect("children computed first");
            let key = ParamKey {
                relation: tree.nodes[c].via.expect("child relation"),
                layer,
            };
            let w = model.weight(key)?;
            if child.h.ncols() != w.nrows() {
                return Err(Error::DimMismatch(format!(
                    "relation #{} layer {layer}: input width {} vs weight rows {}",
                    key.relation.0,
                    child.h.ncols(),
                    w.nrows()
                )));
            }
            let m = mean_rows(child.link.as_ref().expect("child link"), child.h.view());
            z += &m.dot(w);
            means.push((c, m));
        }
        let h = if q == 0 { z.clone() } else { relu(&z) };
        positions[q] = Some(PositionTape {
            nodes,
            link,
            means,
            z: Some(z),
            h,
        });
    }
    let positions: Vec<PositionTape> = positions.into_iter().map(|p| p.expect("every position visited")).collect();
    let logits = positions[0].h.clone();
    Ok((
        logits,
        Tape {
            batch: batch.to_vec(),
            positions,
        },
    ))
}

/// Reverse pass from `d_logits` through the recorded tape.
pub fn backward(
    model: &HgnnModel,
    tree: &Metatree,
    tape: &Tape,
    d_logits: &Array2<f64>,
    inputs: &dyn FeatureSource,
) -> Result<Gradients> {
    let mut grads = Gradients::default();
    let mut dh: Vec<Option<Array2<f64>>> = vec![None; tree.len()];
    dh[0] = Some(d_logits.clone());
    for q in 0..tree.len() {
        let Some(d_out) = dh[q].take() else { continue };
        let node = &tree.nodes[q];
        let pos = &tape.positions[q];
        if node.depth == tree.k {
            if inputs.is_learnable(node.ntype) {
                for (i, &id) in pos.nodes.iter().enumerate() {
                    grads.add_row(node.ntype, id, d_out.row(i));
                }
            }
            continue;
        }
        let z = pos.z.as_ref().expect("inner position has pre-activation");
        let dz = if q == 0 { d_out } else { relu_backward(z, &d_out) };
        let layer = tree.k - node.depth;
        for (c, m) in &pos.means {
            let key = ParamKey {
                relation: tree.nodes[*c].via.expect("child relation"),
                layer,
            };
            let w = model.weight(key)?;
            grads.add_weight(key, &m.t().dot(&dz));
            let dm = dz.dot(&w.t());
            let child = &tape.positions[*c];
            let link = child.link.as_ref().expect("child link");
            dh[*c] = Some(mean_rows_backward(link, dm.view(), child.nodes.len()));
        }
    }
    Ok(grads)
}

/// Mean softmax cross-entropy over `labels.len()` rows, normalised by `denom`.
pub fn softmax_cross_entropy(logits: &Array2<f64>, labels: &[u32], denom: usize) -> Result<(f64, Array2<f64>)> {
    if logits.nrows() != labels.len() {
        return Err(Error::DimMismatch(format!("{} logit rows for {} labels", logits.nrows(), labels.len())));
    }
    let c = logits.ncols();
    if let Some(&bad) = labels.iter().find(|&&y| y as usize >= c) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            num_classes: c,
        });
    }
    let denom = denom.max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.dim());
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.slice(s![i, ..]);
        let mx = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let sum: f64 = row.iter().map(|&x| (x - mx).exp()).sum();
        let lse = mx + sum.ln();
        loss += lse - row[y as usize];
        for j in 0..c {
            let p = (row[j] - lse).exp();
            grad[[i, j]] = (p - if j == y as usize { 1.0 } else { 0.0 }) / denom;
        }
    }
    Ok((loss / denom, grad))
}

/// Loss of a forward result and the gradients of every weight and touched learnable row.
pub fn loss_and_grad(
    model: &HgnnModel,
    tree: &Metatree,
    tape: &Tape,
    logits: &Array2<f64>,
    labels: &[u32],
    inputs: &dyn FeatureSource,
) -> Result<(f64, Gradients)> {
    let (loss, d) = softmax_cross_entropy(logits, labels, labels.len())?;
    let grads = backward(model, tree, tape, &d, inputs)?;
    Ok((loss, grads))
}

/// Labels of `batch` from the graph.
pub fn batch_labels(g: &HetGraph, batch: &[u32]) -> Result<Vec<u32>> {
    let labels = g
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("graph has no labels".into()))?;
    batch
        .iter()
        .map(|&b| {
            labels.get(b as usize).copied().ok_or_else(|| Error::SeedOutOfRange {
                ntype: g.type_name(g.target).to_string(),
                id: b,
                count: labels.len(),
            })
        })
        .collect()
}
