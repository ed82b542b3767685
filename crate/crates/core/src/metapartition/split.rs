use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Metatree;
use crate::error::{Error, Result};
use crate::hetgraph::{Metagraph, NodeTypeId, RelationId};

/// How repeated types and relations inside one sub-metatree are weighed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightPolicy {
    #[default]
    Unique,
    Multiset,
}

/// The root, one child of the root, and that child's descendants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubMetatree {
    pub id: usize,
    /// Tree position of the root's child.
    pub child: usize,
    pub child_type: NodeTypeId,
    /// Tree positions excluding the root, breadth-first.
    pub positions: Vec<usize>,
    /// Node types including the root type, ascending.
    pub vertex_types: Vec<NodeTypeId>,
    /// Relations of every link, breadth-first, duplicates kept.
    pub relations: Vec<RelationId>,
    pub weight: u64,
}

impl SubMetatree {
    pub fn unique_relations(&self) -> Vec<RelationId> {
        let mut seen = BTreeSet::new();
        self.relations.iter().copied().filter(|r| seen.insert(*r)).collect()
    }
}

pub fn split_metatree(t: &Metatree, m: &Metagraph, policy: WeightPolicy) -> Vec<SubMetatree> {
    t.root_children()
        .iter()
        .enumerate()
        .map(|(id, &c)| {
            let positions = t.subtree(c);
            let relations: Vec<RelationId> = positions.iter().filter_map(|&q| t.nodes[q].via).collect();
            let mut vertex_types: BTreeSet<NodeTypeId> = positions.iter().map(|&q| t.nodes[q].ntype).collect();
            vertex_types.insert(t.root);
            let weight = match policy {
                WeightPolicy::Unique => {
                    let rels: BTreeSet<RelationId> = relations.iter().copied().collect();
                    vertex_types.iter().map(|&v| m.vertex_weight(v)).sum::<u64>()
                        + rels.iter().map(|&r| m.link_weight(r)).sum::<u64>()
                }
                WeightPolicy::Multiset => {
                    m.vertex_weight(t.root)
                        + positions.iter().map(|&q| m.vertex_weight(t.nodes[q].ntype)).sum::<u64>()
                        + relations.iter().map(|&r| m.link_weight(r)).sum::<u64>()
                }
            };
            SubMetatree {
                id,
                child: c,
                child_type: t.nodes[c].ntype,
                positions,
                vertex_types: vertex_types.into_iter().collect(),
                relations,
                weight,
            }
        })
        .collect()
}

/// Longest-processing-time-first assignment of weighted items to `p` bins.
///
/// Items go heaviest first (ties: lower index first) to the currently lightest
/// bin (ties: lower bin index). Returns the bin of every item.
pub fn lpt_assign(weights: &[u64], p: usize) -> Result<Vec<usize>> {
    if p == 0 {
        return Err(Error::InvalidArgument("partition count must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));
    let mut sums = vec![0u64; p];
    let mut out = vec![0usize; weights.len()];
    for i in order {
        let bin = (0..p).min_by_key(|&b| (sums[b], b)).unwrap_or(0);
        sums[bin] += weights[i];
        out[i] = bin;
    }
    Ok(out)
}

/// Largest bin sum of an assignment.
pub fn makespan(weights: &[u64], assignment: &[usize], p: usize) -> u64 {
    let mut sums = vec![0u64; p];
    for (w, &b) in weights.iter().zip(assignment) {
        sums[b] += w;
    }
    sums.into_iter().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_item_lands_in_first_bin() {
        assert_eq!(lpt_assign(&[9], 3).unwrap(), vec![0]);
    }

    #[test]
    fn zero_bins_rejected() {
        assert!(lpt_assign(&[1, 2], 0).is_err());
    }

    #[test]
    fn ties_prefer_lower_ids_and_bins() {
        assert_eq!(lpt_assign(&[5, 5, 5, 5], 2).unwrap(), vec![0, 1, 0, 1]);
    }
}
