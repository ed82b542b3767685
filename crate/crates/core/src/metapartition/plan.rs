use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_metatree, lpt_assign, split_metatree, Metatree, MetatreeMode, SubMetatree, WeightPolicy};
use crate::error::{Error, Result};
use crate::hetgraph::{mix_seed, Metagraph, NodeTypeId, RelationId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    /// Whole sub-metatrees per partition.
    Meta,
    /// Each tree relation placed on a uniformly random partition.
    RandomRelation,
}

/// Position of a partition within its replica group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicaInfo {
    pub group: usize,
    pub index: usize,
    pub count: usize,
}

impl ReplicaInfo {
    pub fn is_replica(&self) -> bool {
        self.count > 1
    }

    /// Contiguous share of a batch of `len` items handled by this replica.
    pub fn slice(&self, len: usize) -> std::ops::Range<usize> {
        let start = len * self.index / self.count;
        let end = len * (self.index + 1) / self.count;
        start..end
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub id: usize,
    pub submetatrees: Vec<usize>,
    /// Relations of the assigned sub-metatrees in id order, duplicates kept.
    pub raw_relations: Vec<RelationId>,
    /// Relation set served by this partition.
    pub relations: Vec<RelationId>,
    /// Duplicate instances dropped by deduplication.
    pub removed: Vec<RelationId>,
    pub node_types: Vec<NodeTypeId>,
    pub weight: u64,
    pub replica: ReplicaInfo,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub kind: PlanKind,
    pub target: NodeTypeId,
    pub policy: WeightPolicy,
    pub tree: Metatree,
    pub submetatrees: Vec<SubMetatree>,
    pub partitions: Vec<PartitionSpec>,
    /// Replica group owning the link into each tree position; `None` at the root.
    pub link_group: Vec<Option<usize>>,
    pub deduplicated: bool,
}

fn endpoint_types(m: &Metagraph, target: NodeTypeId, rels: &[RelationId]) -> Vec<NodeTypeId> {
    let mut types: BTreeSet<NodeTypeId> = BTreeSet::from([target]);
    for &r in rels {
        let rel = m.link(r).relation;
        types.insert(rel.src);
        types.insert(rel.dst);
    }
    types.into_iter().collect()
}

/// LPT assignment of sub-metatrees to `p` partitions, before deduplication.
pub fn assign(
    m: &Metagraph,
    tree: &Metatree,
    subs: &[SubMetatree],
    p: usize,
    policy: WeightPolicy,
) -> Result<PartitionPlan> {
    let weights: Vec<u64> = subs.iter().map(|s| s.weight).collect();
    let bins = lpt_assign(&weights, p)?;
    let mut partitions: Vec<PartitionSpec> = (0..p)
        .map(|i| PartitionSpec {
            id: i,
            submetatrees: Vec::new(),
            raw_relations: Vec::new(),
            relations: Vec::new(),
            removed: Vec::new(),
            node_types: vec![tree.root],
            weight: 0,
            replica: ReplicaInfo {
                group: i,
                index: 0,
                count: 1,
            },
        })
        .collect();
    for (s, &b) in subs.iter().zip(&bins) {
        let part = &mut partitions[b];
        part.submetatrees.push(s.id);
        part.raw_relations.extend(s.relations.iter().copied());
        part.weight += s.weight;
    }
    for part in &mut partitions {
        part.relations = part.raw_relations.clone();
        part.node_types = endpoint_types(m, tree.root, &part.raw_relations);
    }
    let mut link_group = vec![None; tree.len()];
    for (s, &b) in subs.iter().zip(&bins) {
        for &q in &s.positions {
            link_group[q] = Some(b);
        }
    }
    Ok(PartitionPlan {
        kind: PlanKind::Meta,
        target: tree.root,
        policy,
        tree: tree.clone(),
        submetatrees: subs.to_vec(),
        partitions,
        link_group,
        deduplicated: false,
    })
}

/// Keeps the first instance of every relation per partition, in sub-metatree id order.
pub fn deduplicate(plan: &PartitionPlan) -> PartitionPlan {
    let mut out = plan.clone();
    for part in &mut out.partitions {
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        let mut removed = Vec::new();
        for &r in &part.raw_relations {
            if seen.insert(r) {
                kept.push(r);
            } else {
                removed.push(r);
            }
        }
        part.relations = kept;
        part.removed = removed;
    }
    out.deduplicated = true;
    out
}

/// Builds the metatree, splits it, assigns by LPT and deduplicates.
///
/// When `p` exceeds the number of sub-metatrees the heaviest groups are
/// replicated to fill the extra workers.
pub fn meta_partition(
    m: &Metagraph,
    root: NodeTypeId,
    mode: MetatreeMode,
    p: usize,
    policy: WeightPolicy,
) -> Result<PartitionPlan> {
    if p == 0 {
        return Err(Error::InvalidArgument("partition count must be at least 1".into()));
    }
    let tree = build_metatree(m, root, mode)?;
    let subs = split_metatree(&tree, m, policy);
    if p > subs.len() && !subs.is_empty() {
        let base = deduplicate(&assign(m, &tree, &subs, subs.len(), policy)?);
        Ok(replicate_for_excess_workers(&base, p))
    } else {
        Ok(deduplicate(&assign(m, &tree, &subs, p, policy)?))
    }
}

/// Duplicates the heaviest groups, round-robin, until there are `p` partitions.
pub fn replicate_for_excess_workers(plan: &PartitionPlan, p: usize) -> PartitionPlan {
    let mut groups: Vec<usize> = plan.partitions.iter().map(|s| s.replica.group).collect();
    groups.dedup();
    if p <= plan.partitions.len() || groups.is_empty() {
        return plan.clone();
    }
    let first_of = |g: usize| plan.partitions.iter().find(|s| s.replica.group == g).cloned();
    let mut counts: Vec<usize> = groups
        .iter()
        .map(|&g| plan.partitions.iter().filter(|s| s.replica.group == g).count())
        .collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| {
        let (wa, wb) = (first_of(groups[a]).map_or(0, |s| s.weight), first_of(groups[b]).map_or(0, |s| s.weight));
        wb.cmp(&wa).then(groups[a].cmp(&groups[b]))
    });
    let mut total = plan.partitions.len();
    let mut next = 0;
    while total < p {
        counts[order[next % order.len()]] += 1;
        next += 1;
        total += 1;
    }
    let mut partitions = Vec::with_capacity(p);
    for (gi, &g) in groups.iter().enumerate() {
        let Some(template) = first_of(g) else { continue };
        for index in 0..counts[gi] {
            let mut spec = template.clone();
            spec.id = partitions.len();
            spec.replica = ReplicaInfo {
                group: g,
                index,
                count: counts[gi],
            };
            partitions.push(spec);
        }
    }
    PartitionPlan {
        partitions,
        ..plan.clone()
    }
}

/// Relation-level baseline: every distinct tree relation goes to a random partition.
pub fn random_relation_plan(m: &Metagraph, tree: &Metatree, p: usize, seed: u64) -> Result<PartitionPlan> {
    if p == 0 {
        return Err(Error::InvalidArgument("partition count must be at least 1".into()));
    }
    let rels = tree.unique_relations();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0x5E1A]));
    let owner: Vec<(RelationId, usize)> = rels.iter().map(|&r| (r, rng.random_range(0..p))).collect();
    let owner_of = |r: RelationId| owner.iter().find(|(x, _)| *x == r).map(|(_, o)| *o);
    let partitions = (0..p)
        .map(|i| {
            let relations: Vec<RelationId> = owner.iter().filter(|(_, o)| *o == i).map(|(r, _)| *r).collect();
            PartitionSpec {
                id: i,
                submetatrees: Vec::new(),
                raw_relations: relations.clone(),
                node_types: endpoint_types(m, tree.root, &relations),
                weight: relations.iter().map(|&r| m.link_weight(r)).sum(),
                relations,
                removed: Vec::new(),
                replica: ReplicaInfo {
                    group: i,
                    index: 0,
                    count: 1,
                },
            }
        })
        .collect();
    let link_group = tree.nodes.iter().map(|n| n.via.and_then(owner_of)).collect();
    Ok(PartitionPlan {
        kind: PlanKind::RandomRelation,
        target: tree.root,
        policy: WeightPolicy::Unique,
        tree: tree.clone(),
        submetatrees: split_metatree(tree, m, WeightPolicy::Unique),
        partitions,
        link_group,
        deduplicated: true,
    })
}

impl PartitionPlan {
    pub fn num_partitions(&self) -> usize {
        self.partitions.len()
    }

    pub fn num_groups(&self) -> usize {
        self.partitions.iter().map(|s| s.replica.group + 1).max().unwrap_or(0)
    }

    pub fn group_of(&self, partition: usize) -> usize {
        self.partitions[partition].replica.group
    }

    pub fn group_members(&self, group: usize) -> Vec<usize> {
        self.partitions
            .iter()
            .filter(|s| s.replica.group == group)
            .map(|s| s.id)
            .collect()
    }

    /// Tree positions whose incoming link is owned by `group`.
    pub fn owned_links(&self, group: usize) -> Vec<usize> {
        (1..self.tree.len())
            .filter(|&q| self.link_group[q] == Some(group))
            .collect()
    }

    /// Positions at which `partition` contributes partial aggregates that are
    /// combined on another worker.
    pub fn remote_combined_positions(&self, partition: usize) -> Vec<usize> {
        let g = self.group_of(partition);
        (0..self.tree.len())
            .filter(|&q| {
                let owns_child = self.tree.nodes[q]
                    .children
                    .iter()
                    .any(|&c| self.link_group[c] == Some(g));
                owns_child
                    && if q == 0 {
                        self.num_partitions() >= 2
                    } else {
                        self.link_group[q] != Some(g)
                    }
            })
            .collect()
    }

    /// Union of relations across partitions, ascending.
    pub fn covered_relations(&self) -> Vec<RelationId> {
        let set: BTreeSet<RelationId> = self
            .partitions
            .iter()
            .flat_map(|s| s.relations.iter().copied())
            .collect();
        set.into_iter().collect()
    }

    /// Node types whose raw features are consumed on `partition`: types at
    /// depth `k` reached through links it owns.
    pub fn leaf_types(&self, partition: usize) -> Vec<NodeTypeId> {
        let g = self.group_of(partition);
        let set: BTreeSet<NodeTypeId> = self
            .owned_links(g)
            .into_iter()
            .filter(|&q| self.tree.nodes[q].depth == self.tree.k)
            .map(|q| self.tree.nodes[q].ntype)
            .collect();
        set.into_iter().collect()
    }
}
