use super::{DegreeDist, NodeTypeSpec, RelationSpec, SyntheticSpec};
use crate::hetgraph::StorageKind;

pub const BUNDLED_SPECS: [&str; 4] = ["mag-mini", "freebase-mini", "donor-mini", "igb-mini"];

fn nt(name: &str, count: usize, dim: usize, storage: StorageKind) -> NodeTypeSpec {
    NodeTypeSpec {
        name: name.into(),
        count,
        dim,
        storage,
    }
}

fn rel(src: &str, etype: &str, dst: &str, edges: usize) -> RelationSpec {
    RelationSpec {
        src: src.into(),
        etype: etype.into(),
        dst: dst.into(),
        edges,
        degree: DegreeDist::PowerLaw { alpha: 0.8 },
    }
}

use StorageKind::{Dense, Learnable};

/// Paper/author/institution/field schema; papers carry dense features.
pub fn mag_mini() -> SyntheticSpec {
    SyntheticSpec {
        name: "mag-mini".into(),
        node_types: vec![
            nt("paper", 3000, 128, Dense),
            nt("author", 3500, 64, Learnable),
            nt("institution", 300, 64, Learnable),
            nt("field_of_study", 600, 64, Learnable),
        ],
        relations: vec![
            rel("author", "affiliated_with", "institution", 3000),
            rel("author", "writes", "paper", 9000),
            rel("paper", "cites", "paper", 8000),
            rel("paper", "has_topic", "field_of_study", 6000),
        ],
        target: "paper".into(),
        num_classes: 16,
        label_noise: 0.1,
        add_reverse: true,
    }
}

/// Knowledge-graph-like schema where no type has input features.
pub fn freebase_mini() -> SyntheticSpec {
    let types = ["book", "film", "music", "sports", "organization", "location", "people", "business"];
    let mut relations = Vec::new();
    let links = [
        (6, "authored", 0),
        (1, "adapted_from", 0),
        (4, "published", 0),
        (5, "set_in", 0),
        (6, "acted_in", 1),
        (6, "performed", 2),
        (4, "sponsors", 3),
        (5, "hosts", 4),
        (7, "owns", 4),
        (6, "born_in", 5),
        (7, "located_in", 5),
        (2, "soundtrack_of", 1),
    ];
    for (s, e, d) in links {
        relations.push(rel(types[s], e, types[d], 2500));
    }
    SyntheticSpec {
        name: "freebase-mini".into(),
        node_types: types.iter().map(|t| nt(t, 1200, 32, Learnable)).collect(),
        relations,
        target: "book".into(),
        num_classes: 8,
        label_noise: 0.0,
        add_reverse: true,
    }
}

/// Seven dense types with feature widths from 7 to 789.
pub fn donor_mini() -> SyntheticSpec {
    SyntheticSpec {
        name: "donor-mini".into(),
        node_types: vec![
            nt("project", 1500, 789, Dense),
            nt("donor", 2000, 7, Dense),
            nt("school", 300, 34, Dense),
            nt("teacher", 600, 9, Dense),
            nt("resource", 2500, 120, Dense),
            nt("city", 150, 16, Dense),
            nt("essay", 1500, 300, Dense),
        ],
        relations: vec![
            rel("donor", "donates_to", "project", 6000),
            rel("school", "hosts", "project", 1500),
            rel("teacher", "proposes", "project", 1500),
            rel("resource", "requested_by", "project", 5000),
            rel("essay", "describes", "project", 1500),
            rel("city", "contains", "school", 300),
            rel("donor", "lives_in", "city", 2000),
            rel("teacher", "works_at", "school", 600),
        ],
        target: "project".into(),
        num_classes: 4,
        label_noise: 0.1,
        add_reverse: true,
    }
}

/// Four dense types of equal width.
pub fn igb_mini() -> SyntheticSpec {
    SyntheticSpec {
        name: "igb-mini".into(),
        node_types: vec![
            nt("paper", 2500, 256, Dense),
            nt("author", 3000, 256, Dense),
            nt("institute", 200, 256, Dense),
            nt("fos", 500, 256, Dense),
        ],
        relations: vec![
            rel("paper", "cites", "paper", 7000),
            rel("author", "written_by", "paper", 7500),
            rel("institute", "affiliated_to", "author", 3000),
            rel("fos", "topic", "paper", 5000),
        ],
        target: "paper".into(),
        num_classes: 19,
        label_noise: 0.1,
        add_reverse: true,
    }
}

pub fn bundled_spec(name: &str) -> Option<SyntheticSpec> {
    match name {
        "mag-mini" => Some(mag_mini()),
        "freebase-mini" => Some(freebase_mini()),
        "donor-mini" => Some(donor_mini()),
        "igb-mini" => Some(igb_mini()),
        _ => None,
    }
}
