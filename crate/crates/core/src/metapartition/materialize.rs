use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PartitionPlan, ReplicaInfo};
use crate::error::{Error, Result};
use crate::hetgraph::{mix_seed, Adjacency, Csr, FeatureStore, HetGraph, NodeTypeId, RelationId, TypeFeatures};

/// Global node identity: `(type, local index)`.
pub type NodeKey = (NodeTypeId, u32);

/// A partition's own graph: complete owned relations, every target node with
/// labels, and features only for the node types it serves.
///
/// Type ids and counts match the parent graph so node keys stay valid.
#[derive(Clone, Debug, PartialEq)]
pub struct HetPartition {
    pub id: usize,
    pub graph: HetGraph,
    /// Parent-graph id of each relation in `graph.relations`.
    pub relation_ids: Vec<RelationId>,
    pub node_types: Vec<NodeTypeId>,
    pub replica: ReplicaInfo,
}

impl HetPartition {
    /// Local index of parent relation `r`, if owned.
    pub fn local_relation(&self, r: RelationId) -> Option<usize> {
        self.relation_ids.iter().position(|&x| x == r)
    }

    pub fn owns_type(&self, t: NodeTypeId) -> bool {
        self.node_types.contains(&t)
    }
}

pub fn materialize_partitions(g: &HetGraph, plan: &PartitionPlan) -> Result<Vec<HetPartition>> {
    if !plan.deduplicated {
        return Err(Error::PlanMismatch("plan must be deduplicated before materialization".into()));
    }
    plan.partitions
        .iter()
        .map(|spec| {
            let mut relations = Vec::with_capacity(spec.relations.len());
            for &r in &spec.relations {
                let rd = g.relations.get(r.index()).ok_or_else(|| {
                    Error::PlanMismatch(format!("relation #{} not present in graph", r.0))
                })?;
                relations.push(rd.clone());
            }
            let features = FeatureStore {
                types: g
                    .features
                    .types
                    .iter()
                    .enumerate()
                    .map(|(t, f)| {
                        if spec.node_types.contains(&NodeTypeId(t as u16)) {
                            f.clone()
                        } else {
                            TypeFeatures::absent()
                        }
                    })
                    .collect(),
            };
            // reverse links point into the parent graph, so keep them only as plain relations
            for r in &mut relations {
                r.reverse = Default::default();
            }
            let graph = HetGraph {
                node_types: g.node_types.clone(),
                edge_types: g.edge_types.clone(),
                relations,
                features,
                target: g.target,
                labels: g.labels.clone(),
                num_classes: g.num_classes,
            };
            Ok(HetPartition {
                id: spec.id,
                graph,
                relation_ids: spec.relations.clone(),
                node_types: spec.node_types.clone(),
                replica: spec.replica,
            })
        })
        .collect()
}

/// Nodes of `part` whose partial aggregates are combined on another worker.
///
/// A node counts when it has an incoming edge, in a relation the partition
/// owns, at a tree position whose cross-relation combine happens elsewhere.
pub fn boundary_nodes(part: &HetPartition, plan: &PartitionPlan) -> BTreeSet<NodeKey> {
    let group = plan.group_of(part.id);
    let mut out = BTreeSet::new();
    for q in plan.remote_combined_positions(part.id) {
        let t = plan.tree.nodes[q].ntype;
        for &c in &plan.tree.nodes[q].children {
            if plan.link_group[c] != Some(group) {
                continue;
            }
            let Some(r) = plan.tree.nodes[c].via else { continue };
            let Some(li) = part.local_relation(r) else { continue };
            let adj = &part.graph.relations[li].adj;
            for d in 0..adj.num_dst() {
                if adj.degree(d as u32) > 0 {
                    out.insert((t, d as u32));
                }
            }
        }
    }
    out
}

/// Relations carried by links that feed a remotely combined position.
pub fn cross_relations(plan: &PartitionPlan) -> Vec<RelationId> {
    let mut set = BTreeSet::new();
    for i in 0..plan.num_partitions() {
        let g = plan.group_of(i);
        for q in plan.remote_combined_positions(i) {
            for &c in &plan.tree.nodes[q].children {
                if plan.link_group[c] == Some(g) {
                    if let Some(r) = plan.tree.nodes[c].via {
                        set.insert(r);
                    }
                }
            }
        }
    }
    set.into_iter().collect()
}

/// Edges whose aggregation crosses partitions under a relation-level plan.
pub fn cross_partition_edges(g: &HetGraph, plan: &PartitionPlan) -> usize {
    cross_relations(plan)
        .into_iter()
        .map(|r| g.relations[r.index()].adj.num_edges())
        .sum()
}

/// Random per-type node assignment used by the data-parallel baseline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeOwnership {
    pub parts: usize,
    pub owner: Vec<Vec<u16>>,
}

impl NodeOwnership {
    pub fn owner_of(&self, t: NodeTypeId, id: u32) -> usize {
        self.owner[t.index()][id as usize] as usize
    }

    pub fn local_nodes(&self, t: NodeTypeId, part: usize) -> Vec<u32> {
        self.owner[t.index()]
            .iter()
            .enumerate()
            .filter(|(_, &o)| o as usize == part)
            .map(|(i, _)| i as u32)
            .collect()
    }
}

pub fn random_node_partition(g: &HetGraph, p: usize, seed: u64) -> Result<NodeOwnership> {
    if p == 0 || p > u16::MAX as usize {
        return Err(Error::InvalidArgument(format!("invalid partition count {p}")));
    }
    let owner = g
        .node_types
        .iter()
        .enumerate()
        .map(|(t, info)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0x0DE5, t as u64]));
            (0..info.count).map(|_| rng.random_range(0..p) as u16).collect()
        })
        .collect();
    Ok(NodeOwnership { parts: p, owner })
}

/// Edge-cut view of a node assignment over the given relations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCut {
    /// Per partition, nodes with a neighbour owned elsewhere.
    pub boundary: Vec<usize>,
    /// Edges whose endpoints lie in different partitions.
    pub cut_edges: usize,
}

pub fn edge_cut(g: &HetGraph, own: &NodeOwnership, relations: &[RelationId]) -> EdgeCut {
    let mut marked: Vec<BTreeSet<NodeKey>> = vec![BTreeSet::new(); own.parts];
    let mut cut = 0;
    for &r in relations {
        let rd = &g.relations[r.index()];
        let (st, dt) = (rd.relation.src, rd.relation.dst);
        for (s, d) in rd.adj.edges() {
            let (os, od) = (own.owner_of(st, s), own.owner_of(dt, d));
            if os != od {
                cut += 1;
                marked[os].insert((st, s));
                marked[od].insert((dt, d));
            }
        }
    }
    EdgeCut {
        boundary: marked.iter().map(BTreeSet::len).collect(),
        cut_edges: cut,
    }
}

impl Adjacency for HetPartition {
    fn adjacency(&self, relation: RelationId) -> Option<&Csr> {
        self.local_relation(relation).map(|i| &self.graph.relations[i].adj)
    }
}
