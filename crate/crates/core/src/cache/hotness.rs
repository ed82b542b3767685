use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hetgraph::{epoch_batches, mix_seed, sample_khop, HetGraph, NodeTypeId, SampleOptions};

/// Visit counts per node type and node.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HotnessTable {
    pub epochs: usize,
    pub counts: Vec<Vec<u64>>,
}

impl HotnessTable {
    pub fn zeros(type_counts: &[usize]) -> Self {
        HotnessTable {
            epochs: 0,
            counts: type_counts.iter().map(|&n| vec![0; n]).collect(),
        }
    }

    pub fn count(&self, t: NodeTypeId, id: u32) -> u64 {
        self.counts
            .get(t.index())
            .and_then(|c| c.get(id as usize))
            .copied()
            .unwrap_or(0)
    }

    /// `count_a`: total visits of a type.
    pub fn total(&self, t: NodeTypeId) -> u64 {
        self.counts.get(t.index()).map_or(0, |c| c.iter().sum())
    }

    pub fn record(&mut self, t: NodeTypeId, id: u32) {
        self.counts[t.index()][id as usize] += 1;
    }

    /// Ids of type `t` by descending count, ties by ascending id.
    pub fn ranked(&self, t: NodeTypeId) -> Vec<u32> {
        let c = &self.counts[t.index()];
        let mut ids: Vec<u32> = (0..c.len() as u32).collect();
        ids.sort_by(|&a, &b| c[b as usize].cmp(&c[a as usize]).then(a.cmp(&b)));
        ids
    }
}

/// Counts how often each node is drawn as a sampled neighbour over `epochs`
/// full passes of the target nodes.
pub fn presample_hotness(
    g: &HetGraph,
    fanouts: &[usize],
    epochs: usize,
    batch_size: usize,
    seed: u64,
) -> Result<HotnessTable> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let sizes: Vec<usize> = g.node_types.iter().map(|t| t.count).collect();
    let mut table = HotnessTable::zeros(&sizes);
    table.epochs = epochs;
    let targets: Vec<u32> = (0..g.node_count(g.target) as u32).collect();
    for epoch in 0..epochs as u64 {
        for (bi, batch) in epoch_batches(&targets, batch_size, seed, epoch).iter().enumerate() {
            let blocks = sample_khop(
                g,
                batch,
                fanouts,
                mix_seed(&[seed, 0x407, epoch, bi as u64]),
                SampleOptions::default(),
            )?;
            for hop in &blocks.hops {
                for b in &hop.blocks {
                    let src = g.relations[b.relation.index()].relation.src;
                    for &s in &b.src {
                        table.record(src, s);
                    }
                }
            }
        }
    }
    Ok(table)
}
