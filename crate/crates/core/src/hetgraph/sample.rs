use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Adjacency, HetGraph, NodeTypeId, RelationId, ReverseTag};
use crate::error::{Error, Result};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one well-mixed 64-bit seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C909, |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Source of sampled neighbourhoods for a `(hop, relation, dst)` triple.
///
/// Hops count from 1 at the seed nodes.
pub trait NeighborSampler {
    fn sample(&self, hop: usize, relation: RelationId, dst: u32) -> Result<Vec<u32>>;
}

/// Counter-based uniform sampler without replacement.
///
/// Every `(hop, relation, dst)` draw uses its own RNG stream derived from the
/// run seed, so any worker asking for the same triple sees the same sample.
/// Relations are addressed by their id in the full graph, so partitions that
/// hold a relation draw exactly what the full graph would.
#[derive(Clone, Debug)]
pub struct FanoutSampler<'g, A: Adjacency + ?Sized = HetGraph> {
    graph: &'g A,
    fanouts: Vec<usize>,
    seed: u64,
}

impl<'g, A: Adjacency + ?Sized> FanoutSampler<'g, A> {
    pub fn new(graph: &'g A, fanouts: &[usize], seed: u64) -> Self {
        FanoutSampler {
            graph,
            fanouts: fanouts.to_vec(),
            seed,
        }
    }

    pub fn fanouts(&self) -> &[usize] {
        &self.fanouts
    }
}

pub(crate) fn draw(neighbors: &[u32], fanout: usize, key: u64) -> Vec<u32> {
    if neighbors.len() <= fanout {
        return neighbors.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let mut idx = rand::seq::index::sample(&mut rng, neighbors.len(), fanout).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| neighbors[i]).collect()
}

impl<A: Adjacency + ?Sized> NeighborSampler for FanoutSampler<'_, A> {
    fn sample(&self, hop: usize, relation: RelationId, dst: u32) -> Result<Vec<u32>> {
        if hop == 0 || hop > self.fanouts.len() {
            return Err(Error::InvalidArgument(format!(
                "hop {hop} outside 1..={}",
                self.fanouts.len()
            )));
        }
        let adj = self
            .graph
            .adjacency(relation)
            .ok_or_else(|| Error::UnknownRelation(format!("#{}", relation.0)))?;
        if dst as usize >= adj.num_dst() {
            return Err(Error::InvalidArgument(format!(
                "destination {dst} out of range for relation #{} ({} nodes)",
                relation.0,
                adj.num_dst()
            )));
        }
        let key = mix_seed(&[self.seed, hop as u64, relation.0 as u64, dst as u64]);
        Ok(draw(adj.neighbors(dst), self.fanouts[hop - 1], key))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// Whether relations marked as reverses are expanded.
    pub include_reverse: bool,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            include_reverse: true,
        }
    }
}

/// Bipartite block of one relation at one hop: `dst[i]` sampled `src[offsets[i]..offsets[i+1]]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationBlock {
    pub relation: RelationId,
    pub dst: Vec<u32>,
    pub offsets: Vec<usize>,
    pub src: Vec<u32>,
}

impl RelationBlock {
    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    pub fn neighbors_of(&self, dst: u32) -> Option<&[u32]> {
        let i = self.dst.binary_search(&dst).ok()?;
        Some(&self.src[self.offsets[i]..self.offsets[i + 1]])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledHop {
    pub blocks: Vec<RelationBlock>,
}

/// k-hop neighbourhood of a seed batch, one block per relation per hop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledBlocks {
    pub seed: u64,
    pub target: NodeTypeId,
    pub seeds: Vec<u32>,
    pub fanouts: Vec<usize>,
    pub hops: Vec<SampledHop>,
}

impl SampledBlocks {
    pub fn block(&self, hop: usize, relation: RelationId) -> Option<&RelationBlock> {
        self.hops
            .get(hop.checked_sub(1)?)?
            .blocks
            .iter()
            .find(|b| b.relation == relation)
    }

    pub fn num_edges(&self) -> usize {
        self.hops
            .iter()
            .flat_map(|h| h.blocks.iter())
            .map(RelationBlock::num_edges)
            .sum()
    }
}

impl NeighborSampler for SampledBlocks {
    fn sample(&self, hop: usize, relation: RelationId, dst: u32) -> Result<Vec<u32>> {
        self.block(hop, relation)
            .and_then(|b| b.neighbors_of(dst))
            .map(<[u32]>::to_vec)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no sampled block for hop {hop}, relation {}, dst {dst}",
                    relation.0
                ))
            })
    }
}

/// Samples `fanouts.len()` hops outward from `seeds` (target-type ids).
pub fn sample_khop(
    g: &HetGraph,
    seeds: &[u32],
    fanouts: &[usize],
    seed: u64,
    opts: SampleOptions,
) -> Result<SampledBlocks> {
    if fanouts.is_empty() {
        return Err(Error::InvalidArgument("fanouts must name at least one hop".into()));
    }
    let count = g.node_count(g.target);
    if let Some(&bad) = seeds.iter().find(|&&s| s as usize >= count) {
        return Err(Error::SeedOutOfRange {
            ntype: g.type_name(g.target).to_string(),
            id: bad,
            count,
        });
    }
    let sampler = FanoutSampler::new(g, fanouts, seed);
    let mut frontier: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); g.num_node_types()];
    frontier[g.target.index()].extend(seeds.iter().copied());
    let mut hops = Vec::with_capacity(fanouts.len());
    for hop in 1..=fanouts.len() {
        let mut next: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); g.num_node_types()];
        let mut blocks = Vec::new();
        for (ri, rd) in g.relations.iter().enumerate() {
            if !opts.include_reverse && matches!(rd.reverse, ReverseTag::ReverseOf(_)) {
                continue;
            }
            let dsts = &frontier[rd.relation.dst.index()];
            if dsts.is_empty() {
                continue;
            }
            let rid = RelationId(ri as u16);
            let mut block = RelationBlock {
                relation: rid,
                dst: Vec::with_capacity(dsts.len()),
                offsets: vec![0],
                src: Vec::new(),
            };
            for &d in dsts {
                let nb = sampler.sample(hop, rid, d)?;
                next[rd.relation.src.index()].extend(nb.iter().copied());
                block.dst.push(d);
                block.src.extend(nb);
                block.offsets.push(block.src.len());
            }
            blocks.push(block);
        }
        hops.push(SampledHop { blocks });
        frontier = next;
    }
    Ok(SampledBlocks {
        seed,
        target: g.target,
        seeds: seeds.to_vec(),
        fanouts: fanouts.to_vec(),
        hops,
    })
}

/// Seeded permutation of `nodes` for `epoch`, cut into batches of `batch_size`.
pub fn epoch_batches(nodes: &[u32], batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<u32>> {
    let mut order = nodes.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0xBA7C, epoch]));
    order.shuffle(&mut rng);
    order
        .chunks(batch_size.max(1))
        .map(<[u32]>::to_vec)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::{HetGraphBuilder, TypeFeatures};

    fn star(leaves: u32) -> HetGraph {
        let mut b = HetGraphBuilder::new();
        b.node_type("t", 1, TypeFeatures::learnable(2));
        b.node_type("l", leaves as usize, TypeFeatures::learnable(2));
        let edges: Vec<(u32, u32)> = (0..leaves).map(|i| (i, 0)).collect();
        b.relation("l", "to", "t", &edges).unwrap();
        b.target("t", 2).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn low_degree_takes_every_neighbor() {
        let g = star(3);
        let s = FanoutSampler::new(&g, &[25], 1);
        assert_eq!(s.sample(1, RelationId(0), 0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn high_degree_is_capped_and_distinct() {
        let g = star(40);
        let s = FanoutSampler::new(&g, &[7], 9);
        let nb = s.sample(1, RelationId(0), 0).unwrap();
        assert_eq!(nb.len(), 7);
        assert!(nb.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn out_of_range_seed_names_the_id() {
        let g = star(2);
        let err = sample_khop(&g, &[5], &[2], 0, SampleOptions::default()).unwrap_err();
        assert!(err.to_string().contains('5'));
    }

    #[test]
    fn batches_cover_nodes_once() {
        let nodes: Vec<u32> = (0..23).collect();
        let b = epoch_batches(&nodes, 5, 3, 0);
        assert_eq!(b.len(), 5);
        let mut all: Vec<u32> = b.concat();
        all.sort_unstable();
        assert_eq!(all, nodes);
        assert_eq!(b, epoch_batches(&nodes, 5, 3, 0));
        assert_ne!(b, epoch_batches(&nodes, 5, 3, 1));
    }
}
