//! Versioned binary container for [`HetGraph`].
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        4 bytes  "HETG"
//! version      u32
//! header_len   u64
//! header       header_len bytes of UTF-8 JSON (see ContainerHeader)
//! edges        per relation in header order: num_edges × (u32 src, u32 dst),
//!              destination-major, sources ascending within a destination
//! features     per dense node type in type order: count × dim f32, row-major
//! labels       if has_labels: target count × u32
//! ```
//!
//! Feature values travel as f32, so a round trip is bit-exact for graphs whose
//! dense features are f32-representable (as generated graphs are).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{
    Csr, FeatureStore, HetGraph, NodeTypeId, NodeTypeInfo, Relation, RelationData, RelationId,
    ReverseTag, StorageKind, TypeFeatures, EdgeTypeId,
};
use crate::error::{Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"HETG";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TypeHeader {
    name: String,
    count: usize,
    kind: StorageKind,
    dim: usize,
    elem_bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RelationHeader {
    src: u16,
    etype: u16,
    dst: u16,
    reverse: ReverseTag,
    num_edges: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ContainerHeader {
    node_types: Vec<TypeHeader>,
    edge_types: Vec<String>,
    relations: Vec<RelationHeader>,
    target: u16,
    num_classes: usize,
    has_labels: bool,
    /// Ids of the stored relations in the graph they were cut from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relation_ids: Option<Vec<u16>>,
}

pub fn write_container<W: Write>(
    mut w: W,
    g: &HetGraph,
    relation_ids: Option<&[RelationId]>,
) -> Result<()> {
    let header = ContainerHeader {
        node_types: g
            .node_types
            .iter()
            .zip(&g.features.types)
            .map(|(t, f)| TypeHeader {
                name: t.name.clone(),
                count: t.count,
                kind: f.kind,
                dim: f.dim,
                elem_bytes: f.elem_bytes,
            })
            .collect(),
        edge_types: g.edge_types.clone(),
        relations: g
            .relations
            .iter()
            .map(|r| RelationHeader {
                src: r.relation.src.0,
                etype: r.relation.etype.0,
                dst: r.relation.dst.0,
                reverse: r.reverse,
                num_edges: r.adj.num_edges(),
            })
            .collect(),
        target: g.target.0,
        num_classes: g.num_classes,
        has_labels: g.labels.is_some(),
        relation_ids: relation_ids.map(|ids| ids.iter().map(|r| r.0).collect()),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(CONTAINER_MAGIC)?;
    w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for r in &g.relations {
        for (s, d) in r.adj.edges() {
            w.write_all(&s.to_le_bytes())?;
            w.write_all(&d.to_le_bytes())?;
        }
    }
    for f in &g.features.types {
        if let (StorageKind::Dense, Some(data)) = (f.kind, &f.data) {
            for &x in data.iter() {
                w.write_all(&(x as f32).to_le_bytes())?;
            }
        }
    }
    if let Some(labels) = &g.labels {
        for &l in labels {
            w.write_all(&l.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_container<R: Read>(mut r: R) -> Result<(HetGraph, Option<Vec<RelationId>>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CONTAINER_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CONTAINER_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: ContainerHeader = serde_json::from_slice(&json)?;

    let mut relations = Vec::with_capacity(header.relations.len());
    for rh in &header.relations {
        let dst_count = header
            .node_types
            .get(rh.dst as usize)
            .ok_or_else(|| Error::Format(format!("relation destination type {} undeclared", rh.dst)))?
            .count;
        let mut edges = Vec::with_capacity(rh.num_edges);
        for _ in 0..rh.num_edges {
            let s = read_u32(&mut r)?;
            let d = read_u32(&mut r)?;
            if d as usize >= dst_count {
                return Err(Error::Format(format!("edge destination {d} out of range")));
            }
            edges.push((s, d));
        }
        relations.push(RelationData {
            relation: Relation {
                src: NodeTypeId(rh.src),
                etype: EdgeTypeId(rh.etype),
                dst: NodeTypeId(rh.dst),
            },
            reverse: rh.reverse,
            adj: Csr::from_edges(dst_count, &edges),
        });
    }
    let mut types = Vec::with_capacity(header.node_types.len());
    for th in &header.node_types {
        let data = if th.kind == StorageKind::Dense {
            let mut buf = vec![0u8; th.count * th.dim * 4];
            r.read_exact(&mut buf)?;
            let vals: Vec<f64> = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            Some(
                Array2::from_shape_vec((th.count, th.dim), vals)
                    .map_err(|e| Error::Format(e.to_string()))?,
            )
        } else {
            None
        };
        types.push(TypeFeatures {
            kind: th.kind,
            dim: th.dim,
            elem_bytes: th.elem_bytes,
            data,
        });
    }
    let labels = if header.has_labels {
        let n = header
            .node_types
            .get(header.target as usize)
            .ok_or_else(|| Error::Format("target type undeclared".into()))?
            .count;
        Some((0..n).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let g = HetGraph {
        node_types: header
            .node_types
            .iter()
            .map(|t| NodeTypeInfo {
                name: t.name.clone(),
                count: t.count,
            })
            .collect(),
        edge_types: header.edge_types,
        relations,
        features: FeatureStore { types },
        target: NodeTypeId(header.target),
        labels,
        num_classes: header.num_classes,
    };
    g.validate()?;
    Ok((g, header.relation_ids.map(|v| v.into_iter().map(RelationId).collect())))
}

pub fn save_graph(path: &Path, g: &HetGraph, relation_ids: Option<&[RelationId]>) -> Result<()> {
    write_container(BufWriter::new(File::create(path)?), g, relation_ids)
}

pub fn load_graph(path: &Path) -> Result<(HetGraph, Option<Vec<RelationId>>)> {
    read_container(BufReader::new(File::open(path)?))
}
