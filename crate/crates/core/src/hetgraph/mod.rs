//! Heterogeneous graph model.
//!
//! Nodes are identified by `(NodeTypeId, local index)`; every relation stores
//! a destination-major [`Csr`] so that aggregation can read the neighbours of a
//! destination directly. Graphs are immutable once built.

mod container;
mod csr;
mod metagraph;
mod sample;

pub use container::{read_container, write_container, load_graph, save_graph, CONTAINER_MAGIC, CONTAINER_VERSION};
pub use csr::Csr;
pub use metagraph::{build_metagraph, MetaLink, MetaVertex, Metagraph};
pub use sample::{
    epoch_batches, mix_seed, sample_khop, FanoutSampler, NeighborSampler, RelationBlock,
    SampleOptions, SampledBlocks, SampledHop,
};

use std::collections::HashSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeTypeId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeTypeId(pub u16);

/// Index of a relation within its graph (or metagraph).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub u16);

impl NodeTypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeTypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// `(source type, edge type, destination type)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation {
    pub src: NodeTypeId,
    pub etype: EdgeTypeId,
    pub dst: NodeTypeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReverseTag {
    /// An ordinary relation.
    #[default]
    Forward,
    /// A relation between a type and itself that serves as its own reverse.
    SelfPaired,
    /// The transposed copy of another relation.
    ReverseOf(RelationId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageKind {
    /// Read-only dense features stored with the graph.
    Dense,
    /// Trainable per-node input vectors owned by the model.
    Learnable,
    /// No input features.
    Absent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeFeatures {
    pub kind: StorageKind,
    pub dim: usize,
    /// Bytes per element used when accounting transfers.
    pub elem_bytes: usize,
    /// Row-major `[count × dim]` matrix, present only for [`StorageKind::Dense`].
    #[serde(skip)]
    pub data: Option<Array2<f64>>,
}

impl TypeFeatures {
    pub fn absent() -> Self {
        TypeFeatures {
            kind: StorageKind::Absent,
            dim: 0,
            elem_bytes: 4,
            data: None,
        }
    }

    pub fn learnable(dim: usize) -> Self {
        TypeFeatures {
            kind: StorageKind::Learnable,
            dim,
            elem_bytes: 4,
            data: None,
        }
    }

    pub fn dense(data: Array2<f64>) -> Self {
        TypeFeatures {
            kind: StorageKind::Dense,
            dim: data.ncols(),
            elem_bytes: 4,
            data: Some(data),
        }
    }

    /// Bytes of one feature vector under the accounting width.
    pub fn row_bytes(&self) -> u64 {
        (self.dim * self.elem_bytes) as u64
    }
}

/// Per node type input features.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FeatureStore {
    pub types: Vec<TypeFeatures>,
}

impl FeatureStore {
    pub fn get(&self, t: NodeTypeId) -> &TypeFeatures {
        &self.types[t.index()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeTypeInfo {
    pub name: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationData {
    pub relation: Relation,
    pub reverse: ReverseTag,
    pub adj: Csr,
}

/// A heterogeneous graph `G = (V, E, A, R)` with one target node type.
#[derive(Clone, Debug, PartialEq)]
pub struct HetGraph {
    pub node_types: Vec<NodeTypeInfo>,
    pub edge_types: Vec<String>,
    pub relations: Vec<RelationData>,
    pub features: FeatureStore,
    pub target: NodeTypeId,
    pub labels: Option<Vec<u32>>,
    pub num_classes: usize,
}

/// Relation adjacency lookup by graph-wide relation id.
pub trait Adjacency {
    fn adjacency(&self, relation: RelationId) -> Option<&Csr>;
}

impl Adjacency for HetGraph {
    fn adjacency(&self, relation: RelationId) -> Option<&Csr> {
        self.relations.get(relation.index()).map(|r| &r.adj)
    }
}

/// The subgraph of a single relation: both endpoint node sets and its edges.
#[derive(Clone, Debug, PartialEq)]
pub struct MonoRelationSubgraph {
    pub id: RelationId,
    pub relation: Relation,
    pub num_src: usize,
    pub num_dst: usize,
    pub adj: Csr,
}

impl HetGraph {
    pub fn num_node_types(&self) -> usize {
        self.node_types.len()
    }

    pub fn node_count(&self, t: NodeTypeId) -> usize {
        self.node_types[t.index()].count
    }

    pub fn num_nodes(&self) -> usize {
        self.node_types.iter().map(|t| t.count).sum()
    }

    pub fn num_edges(&self) -> usize {
        self.relations.iter().map(|r| r.adj.num_edges()).sum()
    }

    pub fn type_name(&self, t: NodeTypeId) -> &str {
        &self.node_types[t.index()].name
    }

    pub fn node_type(&self, name: &str) -> Result<NodeTypeId> {
        self.node_types
            .iter()
            .position(|t| t.name == name)
            .map(|i| NodeTypeId(i as u16))
            .ok_or_else(|| Error::UnknownNodeType(name.to_string()))
    }

    pub fn relation(&self, r: RelationId) -> Relation {
        self.relations[r.index()].relation
    }

    pub fn relation_ids(&self) -> impl Iterator<Item = RelationId> {
        (0..self.relations.len()).map(|i| RelationId(i as u16))
    }

    /// Finds a relation by `(src, etype, dst)` names.
    pub fn find_relation(&self, src: &str, etype: &str, dst: &str) -> Result<RelationId> {
        let s = self.node_type(src)?;
        let d = self.node_type(dst)?;
        self.relations
            .iter()
            .position(|r| {
                r.relation.src == s
                    && r.relation.dst == d
                    && self.edge_types[r.relation.etype.index()] == etype
            })
            .map(|i| RelationId(i as u16))
            .ok_or_else(|| Error::UnknownRelation(format!("({src}, {etype}, {dst})")))
    }

    pub fn relation_label(&self, r: RelationId) -> String {
        let rel = self.relation(r);
        format!(
            "({}, {}, {})",
            self.type_name(rel.src),
            self.edge_types[rel.etype.index()],
            self.type_name(rel.dst)
        )
    }

    pub fn input_dim(&self, t: NodeTypeId) -> usize {
        self.features.get(t).dim
    }

    /// Checks every structural invariant of the graph.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.target.index() >= self.node_types.len() {
            problems.push(format!("target type {} not declared", self.target.0));
        }
        let mut names = HashSet::new();
        for t in &self.node_types {
            if !names.insert(t.name.as_str()) {
                problems.push(format!("duplicate node type name `{}`", t.name));
            }
        }
        let mut etypes = HashSet::new();
        for e in &self.edge_types {
            if !etypes.insert(e.as_str()) {
                problems.push(format!("duplicate edge type name `{e}`"));
            }
        }
        if self.features.types.len() != self.node_types.len() {
            problems.push("feature store does not cover every node type".into());
        }
        let mut triples = HashSet::new();
        for (i, r) in self.relations.iter().enumerate() {
            let rel = r.relation;
            if rel.src.index() >= self.node_types.len()
                || rel.dst.index() >= self.node_types.len()
                || rel.etype.index() >= self.edge_types.len()
            {
                problems.push(format!("relation {i} references an undeclared type"));
                continue;
            }
            if !triples.insert(rel) {
                problems.push(format!("relation {} declared twice", self.relation_label(RelationId(i as u16))));
            }
            if r.adj.num_dst() != self.node_count(rel.dst) {
                problems.push(format!(
                    "relation {} has {} destination rows but `{}` has {} nodes",
                    i,
                    r.adj.num_dst(),
                    self.type_name(rel.dst),
                    self.node_count(rel.dst)
                ));
            }
            if let Some(m) = r.adj.max_source() {
                if m as usize >= self.node_count(rel.src) {
                    problems.push(format!("relation {i} source {m} out of range"));
                }
            }
            if let ReverseTag::ReverseOf(of) = r.reverse {
                match self.relations.get(of.index()) {
                    Some(o) if o.relation.src == rel.dst && o.relation.dst == rel.src && o.relation.etype != rel.etype => {}
                    _ => problems.push(format!("relation {i} is not a valid reverse of {}", of.0)),
                }
            }
        }
        for (t, f) in self.features.types.iter().enumerate() {
            match f.kind {
                StorageKind::Absent if f.dim != 0 => problems.push(format!("absent features for type {t} must have dim 0")),
                StorageKind::Dense => match &f.data {
                    Some(d) if d.nrows() == self.node_types[t].count && d.ncols() == f.dim => {}
                    _ => problems.push(format!("dense features for type {t} have the wrong shape")),
                },
                _ => {}
            }
        }
        if let Some(labels) = &self.labels {
            if self.target.index() < self.node_types.len() && labels.len() != self.node_count(self.target) {
                problems.push("labels must cover every target node".into());
            }
            if let Some(&bad) = labels.iter().find(|&&l| l as usize >= self.num_classes) {
                problems.push(format!("label {bad} exceeds num_classes {}", self.num_classes));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(problems.join("; ")))
        }
    }

    /// One subgraph per relation; together they cover every edge exactly once.
    pub fn decompose_relations(&self) -> Vec<MonoRelationSubgraph> {
        self.relations
            .iter()
            .enumerate()
            .map(|(i, r)| MonoRelationSubgraph {
                id: RelationId(i as u16),
                relation: r.relation,
                num_src: self.node_count(r.relation.src),
                num_dst: self.node_count(r.relation.dst),
                adj: r.adj.clone(),
            })
            .collect()
    }

    /// Adds `r⁻¹ = (dst, rev_<etype>, src)` for every relation between two
    /// distinct types. Relations whose endpoints share a type are marked as
    /// their own reverse.
    pub fn add_reverse_relations(&self) -> Result<HetGraph> {
        if self
            .relations
            .iter()
            .any(|r| !matches!(r.reverse, ReverseTag::Forward))
        {
            return Err(Error::AlreadyReversed);
        }
        let mut g = self.clone();
        let mut reverses = Vec::new();
        for (i, r) in self.relations.iter().enumerate() {
            let rel = r.relation;
            if rel.src == rel.dst {
                g.relations[i].reverse = ReverseTag::SelfPaired;
                continue;
            }
            let name = format!("rev_{}", self.edge_types[rel.etype.index()]);
            if g.edge_types.contains(&name) {
                return Err(Error::DuplicateReverse(name));
            }
            g.edge_types.push(name);
            let etype = EdgeTypeId((g.edge_types.len() - 1) as u16);
            reverses.push(RelationData {
                relation: Relation {
                    src: rel.dst,
                    etype,
                    dst: rel.src,
                },
                reverse: ReverseTag::ReverseOf(RelationId(i as u16)),
                adj: r.adj.transpose(self.node_count(rel.src)),
            });
        }
        g.relations.extend(reverses);
        g.validate()?;
        Ok(g)
    }
}

/// Incremental constructor for [`HetGraph`].
#[derive(Debug, Default)]
pub struct HetGraphBuilder {
    node_types: Vec<NodeTypeInfo>,
    features: Vec<TypeFeatures>,
    edge_types: Vec<String>,
    relations: Vec<RelationData>,
    target: Option<NodeTypeId>,
    labels: Option<Vec<u32>>,
    num_classes: usize,
}

impl HetGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_type(&mut self, name: &str, count: usize, features: TypeFeatures) -> NodeTypeId {
        self.node_types.push(NodeTypeInfo {
            name: name.to_string(),
            count,
        });
        self.features.push(features);
        NodeTypeId((self.node_types.len() - 1) as u16)
    }

    fn type_by_name(&self, name: &str) -> Result<NodeTypeId> {
        self.node_types
            .iter()
            .position(|t| t.name == name)
            .map(|i| NodeTypeId(i as u16))
            .ok_or_else(|| Error::UnknownNodeType(name.to_string()))
    }

    /// Adds relation `(src, etype, dst)` from `(src_id, dst_id)` edge pairs.
    pub fn relation(&mut self, src: &str, etype: &str, dst: &str, edges: &[(u32, u32)]) -> Result<RelationId> {
        let s = self.type_by_name(src)?;
        let d = self.type_by_name(dst)?;
        let (ns, nd) = (self.node_types[s.index()].count, self.node_types[d.index()].count);
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a as usize >= ns || b as usize >= nd) {
            return Err(Error::InvalidGraph(format!(
                "edge ({a}, {b}) of ({src}, {etype}, {dst}) out of range"
            )));
        }
        let e = match self.edge_types.iter().position(|n| n == etype) {
            Some(i) => EdgeTypeId(i as u16),
            None => {
                self.edge_types.push(etype.to_string());
                EdgeTypeId((self.edge_types.len() - 1) as u16)
            }
        };
        self.relations.push(RelationData {
            relation: Relation { src: s, etype: e, dst: d },
            reverse: ReverseTag::Forward,
            adj: Csr::from_edges(nd, edges),
        });
        Ok(RelationId((self.relations.len() - 1) as u16))
    }

    pub fn target(&mut self, name: &str, num_classes: usize) -> Result<NodeTypeId> {
        let t = self.type_by_name(name)?;
        self.target = Some(t);
        self.num_classes = num_classes;
        Ok(t)
    }

    pub fn labels(&mut self, labels: Vec<u32>) -> &mut Self {
        self.labels = Some(labels);
        self
    }

    pub fn build(self) -> Result<HetGraph> {
        let target = self
            .target
            .ok_or_else(|| Error::InvalidGraph("no target node type".into()))?;
        let g = HetGraph {
            node_types: self.node_types,
            edge_types: self.edge_types,
            relations: self.relations,
            features: FeatureStore { types: self.features },
            target,
            labels: self.labels,
            num_classes: self.num_classes,
        };
        g.validate()?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_type_graph(edges: &[(u32, u32)]) -> HetGraph {
        let mut b = HetGraphBuilder::new();
        b.node_type("a", 4, TypeFeatures::learnable(2));
        b.node_type("b", 3, TypeFeatures::absent());
        b.relation("a", "to", "b", edges).unwrap();
        b.target("b", 2).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn reverse_of_single_relation_doubles_relations() {
        let g = two_type_graph(&[(0, 0), (1, 0), (2, 1), (3, 2), (3, 1)]);
        let r = g.add_reverse_relations().unwrap();
        assert_eq!(r.relations.len(), 2);
        assert_eq!(r.relations[0].adj.num_edges(), 5);
        assert_eq!(r.relations[1].adj.num_edges(), 5);
        assert_eq!(r.relations[1].reverse, ReverseTag::ReverseOf(RelationId(0)));
        assert_eq!(r.edge_types[1], "rev_to");
    }

    #[test]
    fn reversing_twice_is_rejected() {
        let g = two_type_graph(&[(0, 0)]).add_reverse_relations().unwrap();
        assert!(matches!(g.add_reverse_relations(), Err(Error::AlreadyReversed)));
    }

    #[test]
    fn duplicate_reverse_name_is_rejected() {
        let mut b = HetGraphBuilder::new();
        b.node_type("a", 2, TypeFeatures::absent());
        b.node_type("b", 2, TypeFeatures::absent());
        b.relation("a", "to", "b", &[(0, 1)]).unwrap();
        b.relation("a", "rev_to", "b", &[(1, 1)]).unwrap();
        b.target("b", 2).unwrap();
        let g = b.build().unwrap();
        assert!(matches!(g.add_reverse_relations(), Err(Error::DuplicateReverse(n)) if n == "rev_to"));
    }

    #[test]
    fn out_of_range_edge_is_rejected() {
        let mut b = HetGraphBuilder::new();
        b.node_type("a", 2, TypeFeatures::absent());
        assert!(b.relation("a", "self", "a", &[(0, 2)]).is_err());
    }

    #[test]
    fn single_relation_decomposition_is_identity() {
        let g = two_type_graph(&[(0, 0), (2, 2)]);
        let parts = g.decompose_relations();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].adj, g.relations[0].adj);
        assert_eq!((parts[0].num_src, parts[0].num_dst), (4, 3));
    }
}
