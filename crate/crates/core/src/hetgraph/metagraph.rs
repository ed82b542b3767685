use serde::{Deserialize, Serialize};

use super::{HetGraph, NodeTypeId, Relation, RelationId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaVertex {
    pub id: NodeTypeId,
    pub name: String,
    pub weight: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaLink {
    pub id: RelationId,
    pub relation: Relation,
    pub name: String,
    pub weight: u64,
}

/// Schema graph: node types weighted by population, relations by edge count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metagraph {
    pub vertices: Vec<MetaVertex>,
    pub links: Vec<MetaLink>,
}

pub fn build_metagraph(g: &HetGraph) -> Metagraph {
    let vertices = g
        .node_types
        .iter()
        .enumerate()
        .map(|(i, t)| MetaVertex {
            id: NodeTypeId(i as u16),
            name: t.name.clone(),
            weight: t.count as u64,
        })
        .collect();
    let links = g
        .relations
        .iter()
        .enumerate()
        .map(|(i, r)| MetaLink {
            id: RelationId(i as u16),
            relation: r.relation,
            name: g.edge_types[r.relation.etype.index()].clone(),
            weight: r.adj.num_edges() as u64,
        })
        .collect();
    Metagraph { vertices, links }
}

impl Metagraph {
    /// A metagraph with explicitly supplied weights. Link `i` gets relation id `i`.
    pub fn from_parts(
        vertices: Vec<(String, u64)>,
        links: Vec<(Relation, String, u64)>,
    ) -> Result<Metagraph> {
        let n = vertices.len();
        let vertices: Vec<MetaVertex> = vertices
            .into_iter()
            .enumerate()
            .map(|(i, (name, weight))| MetaVertex {
                id: NodeTypeId(i as u16),
                name,
                weight,
            })
            .collect();
        for (rel, name, _) in &links {
            if rel.src.index() >= n || rel.dst.index() >= n {
                return Err(Error::UnknownRelation(name.clone()));
            }
        }
        let links = links
            .into_iter()
            .enumerate()
            .map(|(i, (relation, name, weight))| MetaLink {
                id: RelationId(i as u16),
                relation,
                name,
                weight,
            })
            .collect();
        Ok(Metagraph { vertices, links })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains_type(&self, t: NodeTypeId) -> bool {
        t.index() < self.vertices.len()
    }

    pub fn vertex_weight(&self, t: NodeTypeId) -> u64 {
        self.vertices[t.index()].weight
    }

    pub fn link(&self, r: RelationId) -> &MetaLink {
        &self.links[r.index()]
    }

    pub fn link_weight(&self, r: RelationId) -> u64 {
        self.links[r.index()].weight
    }

    pub fn type_by_name(&self, name: &str) -> Result<NodeTypeId> {
        self.vertices
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.id)
            .ok_or_else(|| Error::UnknownNodeType(name.to_string()))
    }

    /// Looks a relation up by `(src, etype, dst)` names.
    pub fn find(&self, src: &str, etype: &str, dst: &str) -> Option<RelationId> {
        let s = self.type_by_name(src).ok()?;
        let d = self.type_by_name(dst).ok()?;
        self.links
            .iter()
            .find(|l| l.relation.src == s && l.relation.dst == d && l.name == etype)
            .map(|l| l.id)
    }

    /// Relations whose destination is `t`, ascending by id.
    pub fn incoming(&self, t: NodeTypeId) -> impl Iterator<Item = &MetaLink> {
        self.links.iter().filter(move |l| l.relation.dst == t)
    }

    pub fn label(&self, r: RelationId) -> String {
        let l = self.link(r);
        format!(
            "({}, {}, {})",
            self.vertices[l.relation.src.index()].name,
            l.name,
            self.vertices[l.relation.dst.index()].name
        )
    }

    pub fn total_link_weight(&self) -> u64 {
        self.links.iter().map(|l| l.weight).sum()
    }
}
