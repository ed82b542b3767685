#![allow(dead_code)]

use hetraf::hetgraph::{build_metagraph, EdgeTypeId, HetGraph, Metagraph, NodeTypeId, Relation};
use hetraf::metapartition::{
    build_metatree, meta_partition, random_relation_plan, MetatreeMode, PartitionPlan, WeightPolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PAPER: NodeTypeId = NodeTypeId(0);
pub const AUTHOR: NodeTypeId = NodeTypeId(1);
pub const INSTITUTION: NodeTypeId = NodeTypeId(2);
pub const FIELD: NodeTypeId = NodeTypeId(3);

/// ogbn-mag schema with weights chosen so the three sub-metatrees weigh 16, 17 and 27.
///
/// Relation ids are ordered so the root's children come out as field, author, paper.
pub fn mag_metagraph() -> Metagraph {
    let rel = |s: NodeTypeId, e: u16, d: NodeTypeId| Relation {
        src: s,
        etype: EdgeTypeId(e),
        dst: d,
    };
    Metagraph::from_parts(
        vec![("paper".into(), 1), ("author".into(), 1), ("institution".into(), 1), ("field".into(), 1)],
        vec![
            (rel(FIELD, 0, PAPER), "rev_has_topic".into(), 7),
            (rel(AUTHOR, 1, PAPER), "writes".into(), 6),
            (rel(PAPER, 2, PAPER), "cites".into(), 11),
            (rel(PAPER, 3, AUTHOR), "rev_writes".into(), 6),
            (rel(AUTHOR, 4, INSTITUTION), "affiliated_with".into(), 2),
            (rel(INSTITUTION, 5, AUTHOR), "rev_affiliated_with".into(), 2),
            (rel(PAPER, 6, FIELD), "has_topic".into(), 7),
        ],
    )
    .unwrap()
}

/// Smallest makespan over all assignments of `w` to `p` bins, by exhaustive search.
pub fn brute_force_makespan(w: &[u64], p: usize) -> u64 {
    fn go(w: &[u64], i: usize, bins: &mut [u64], best: &mut u64) {
        if i == w.len() {
            *best = (*best).min(*bins.iter().max().unwrap_or(&0));
            return;
        }
        for b in 0..bins.len() {
            // bins that are still empty are interchangeable
            if bins[..b].contains(&0) && bins[b] == 0 {
                break;
            }
            bins[b] += w[i];
            if bins[b] < *best {
                go(w, i + 1, bins, best);
            }
            bins[b] -= w[i];
        }
    }
    let mut best = u64::MAX;
    go(w, 0, &mut vec![0; p], &mut best);
    best
}

/// A meta plan, or a random relation plan when `meta` is false.
pub fn plan_for(g: &HetGraph, k: usize, p: usize, meta: bool, seed: u64) -> PartitionPlan {
    let m = build_metagraph(g);
    if meta {
        meta_partition(&m, g.target, MetatreeMode::Bfs(k), p, WeightPolicy::Unique).unwrap()
    } else {
        let tree = build_metatree(&m, g.target, MetatreeMode::Bfs(k)).unwrap();
        random_relation_plan(&m, &tree, p, seed).unwrap()
    }
}

/// Roughly half of the target nodes, never empty.
pub fn random_batch(g: &HetGraph, seed: u64) -> Vec<u32> {
    let n = g.node_count(g.target) as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b: Vec<u32> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
    if b.is_empty() {
        b.push(0);
    }
    b
}
