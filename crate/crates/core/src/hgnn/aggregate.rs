use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hetgraph::{NeighborSampler, NodeTypeId, RelationBlock, RelationId};

/// Node representations at one layer; row `i` belongs to `ids[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub layer: usize,
    pub ntype: NodeTypeId,
    pub ids: Vec<u32>,
    pub data: Array2<f64>,
}

impl Embedding {
    pub fn row_of(&self, id: u32) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }
}

/// Sampled neighbourhoods of a destination list, resolved to row indices of
/// the (sorted, distinct) source list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSample {
    pub src_nodes: Vec<u32>,
    pub offsets: Vec<usize>,
    pub src_idx: Vec<usize>,
}

impl LinkSample {
    pub fn num_dst(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.src_idx[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn num_edges(&self) -> usize {
        self.src_idx.len()
    }

    /// Destinations with at least one sampled neighbour.
    pub fn active(&self) -> Vec<usize> {
        (0..self.num_dst()).filter(|&i| self.offsets[i + 1] > self.offsets[i]).collect()
    }
}

/// Samples `relation` at `hop` for every destination in `dst`.
pub fn expand(sampler: &dyn NeighborSampler, hop: usize, relation: RelationId, dst: &[u32]) -> Result<LinkSample> {
    let mut lists = Vec::with_capacity(dst.len());
    for &d in dst {
        lists.push(sampler.sample(hop, relation, d)?);
    }
    let mut src_nodes: Vec<u32> = lists.iter().flatten().copied().collect();
    src_nodes.sort_unstable();
    src_nodes.dedup();
    let mut offsets = Vec::with_capacity(dst.len() + 1);
    offsets.push(0);
    let mut src_idx = Vec::new();
    for l in &lists {
        for s in l {
            src_idx.push(src_nodes.binary_search(s).expect("sampled source indexed"));
        }
        offsets.push(src_idx.len());
    }
    Ok(LinkSample {
        src_nodes,
        offsets,
        src_idx,
    })
}

/// Row `i` = mean of `h_src` rows over the sampled neighbours of destination `i`.
pub fn mean_rows(link: &LinkSample, h_src: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((link.num_dst(), h_src.ncols()));
    for i in 0..link.num_dst() {
        let nb = link.neighbors(i);
        if nb.is_empty() {
            continue;
        }
        let mut row = out.row_mut(i);
        for &j in nb {
            row += &h_src.row(j);
        }
        row /= nb.len() as f64;
    }
    out
}

/// Adjoint of [`mean_rows`]: spreads `d_mean` back onto source rows.
pub fn mean_rows_backward(link: &LinkSample, d_mean: ArrayView2<f64>, num_src: usize) -> Array2<f64> {
    let mut out = Array2::zeros((num_src, d_mean.ncols()));
    for i in 0..link.num_dst() {
        let nb = link.neighbors(i);
        if nb.is_empty() {
            continue;
        }
        let scaled = &d_mean.row(i) / nb.len() as f64;
        for &j in nb {
            let mut r = out.row_mut(j);
            r += &scaled;
        }
    }
    out
}

/// Per-relation aggregation: mean over sampled neighbours, then `× w`.
pub fn agg_relation(block: &RelationBlock, h_src: &Embedding, w: &Array2<f64>) -> Result<Embedding> {
    if h_src.data.ncols() != w.nrows() {
        return Err(Error::DimMismatch(format!(
            "source rows have {} columns, weight expects {}",
            h_src.data.ncols(),
            w.nrows()
        )));
    }
    let mut src_idx = Vec::with_capacity(block.src.len());
    for &s in &block.src {
        src_idx.push(h_src.row_of(s).ok_or_else(|| {
            Error::DimMismatch(format!("sampled source {s} missing from source embedding"))
        })?);
    }
    let link = LinkSample {
        src_nodes: h_src.ids.clone(),
        offsets: block.offsets.clone(),
        src_idx,
    };
    Ok(Embedding {
        layer: h_src.layer + 1,
        ntype: h_src.ntype,
        ids: block.dst.clone(),
        data: mean_rows(&link, h_src.data.view()).dot(w),
    })
}

/// Cross-relation sum of partial aggregates sharing one destination list.
pub fn agg_all(partials: &[Embedding]) -> Result<Embedding> {
    let first = partials
        .first()
        .ok_or_else(|| Error::InvalidArgument("no partial aggregates to combine".into()))?;
    let mut data = first.data.clone();
    for p in &partials[1..] {
        if p.ids != first.ids {
            return Err(Error::DimMismatch("partials cover different destination nodes".into()));
        }
        if p.data.dim() != data.dim() {
            return Err(Error::DimMismatch("partials have different widths".into()));
        }
        data += &p.data;
    }
    Ok(Embedding {
        data,
        ..first.clone()
    })
}

pub fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|x| x.max(0.0))
}

/// `d_out ⊙ 1[z > 0]`.
pub fn relu_backward(z: &Array2<f64>, d_out: &Array2<f64>) -> Array2<f64> {
    let mut d = d_out.clone();
    ndarray::Zip::from(&mut d).and(z).for_each(|d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
    d
}
