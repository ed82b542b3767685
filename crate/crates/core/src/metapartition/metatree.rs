use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hetgraph::{Metagraph, NodeTypeId, RelationId};

/// One position of the unrolled dependency tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub ntype: NodeTypeId,
    pub parent: Option<usize>,
    /// Relation carrying messages from this position into its parent.
    pub via: Option<RelationId>,
    pub depth: usize,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetatreeMode {
    Bfs(usize),
    Metapaths(Vec<Vec<RelationId>>),
}

/// Computation-dependency tree rooted at the target type; positions are
/// stored in breadth-first order with the root at index 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metatree {
    pub root: NodeTypeId,
    pub k: usize,
    pub mode: MetatreeMode,
    pub nodes: Vec<TreeNode>,
}

pub fn build_metatree(m: &Metagraph, root: NodeTypeId, mode: MetatreeMode) -> Result<Metatree> {
    if !m.contains_type(root) {
        return Err(Error::UnknownNodeType(format!("#{}", root.0)));
    }
    match mode {
        MetatreeMode::Bfs(k) => Ok(bfs_tree(m, root, k)),
        MetatreeMode::Metapaths(paths) => path_tree(m, root, paths),
    }
}

fn bfs_tree(m: &Metagraph, root: NodeTypeId, k: usize) -> Metatree {
    let mut nodes = vec![TreeNode {
        ntype: root,
        parent: None,
        via: None,
        depth: 0,
        children: Vec::new(),
    }];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        if nodes[i].depth >= k {
            continue;
        }
        let (t, depth) = (nodes[i].ntype, nodes[i].depth);
        for link in m.incoming(t) {
            nodes.push(TreeNode {
                ntype: link.relation.src,
                parent: Some(i),
                via: Some(link.id),
                depth: depth + 1,
                children: Vec::new(),
            });
            let c = nodes.len() - 1;
            nodes[i].children.push(c);
            queue.push_back(c);
        }
    }
    Metatree {
        root,
        k,
        mode: MetatreeMode::Bfs(k),
        nodes,
    }
}

fn path_tree(m: &Metagraph, root: NodeTypeId, paths: Vec<Vec<RelationId>>) -> Result<Metatree> {
    for path in &paths {
        let mut expect = root;
        for (i, &r) in path.iter().enumerate() {
            let link = m
                .links
                .get(r.index())
                .ok_or_else(|| Error::InvalidMetapath(format!("relation #{} not in metagraph", r.0)))?;
            if link.relation.dst != expect {
                return Err(Error::InvalidMetapath(format!(
                    "step {i} {} does not end at `{}`",
                    m.label(r),
                    m.vertices[expect.index()].name
                )));
            }
            expect = link.relation.src;
        }
    }
    // trie keyed by (parent, relation), then renumbered breadth-first
    struct Raw {
        ntype: NodeTypeId,
        via: Option<RelationId>,
        children: Vec<usize>,
    }
    let mut raw = vec![Raw {
        ntype: root,
        via: None,
        children: Vec::new(),
    }];
    for path in &paths {
        let mut cur = 0;
        for &r in path {
            let found = raw[cur].children.iter().copied().find(|&c| raw[c].via == Some(r));
            cur = match found {
                Some(c) => c,
                None => {
                    raw.push(Raw {
                        ntype: m.link(r).relation.src,
                        via: Some(r),
                        children: Vec::new(),
                    });
                    let c = raw.len() - 1;
                    raw[cur].children.push(c);
                    c
                }
            };
        }
    }
    let mut nodes: Vec<TreeNode> = Vec::with_capacity(raw.len());
    let mut queue = VecDeque::from([(0usize, None::<usize>, 0usize)]);
    while let Some((ri, parent, depth)) = queue.pop_front() {
        let idx = nodes.len();
        nodes.push(TreeNode {
            ntype: raw[ri].ntype,
            parent,
            via: raw[ri].via,
            depth,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            nodes[p].children.push(idx);
        }
        for &c in &raw[ri].children {
            queue.push_back((c, Some(idx), depth + 1));
        }
    }
    let k = paths.iter().map(Vec::len).max().unwrap_or(0);
    Ok(Metatree {
        root,
        k,
        mode: MetatreeMode::Metapaths(paths),
        nodes,
    })
}

impl Metatree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_children(&self) -> &[usize] {
        &self.nodes[0].children
    }

    /// Layer index whose aggregation runs over the link into position `q`.
    pub fn link_layer(&self, q: usize) -> usize {
        self.k - self.nodes[q].depth + 1
    }

    /// The child of the root whose subtree contains `q` (`None` for the root).
    pub fn branch_of(&self, mut q: usize) -> Option<usize> {
        loop {
            match self.nodes[q].parent {
                None => return None,
                Some(0) => return Some(q),
                Some(p) => q = p,
            }
        }
    }

    /// Positions in the subtree rooted at `q`, breadth-first.
    pub fn subtree(&self, q: usize) -> Vec<usize> {
        let mut out = vec![q];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.nodes[out[i]].children.iter().copied());
            i += 1;
        }
        out
    }

    /// Distinct relations used anywhere in the tree, ascending.
    pub fn unique_relations(&self) -> Vec<RelationId> {
        let mut rels: Vec<RelationId> = self.nodes.iter().filter_map(|n| n.via).collect();
        rels.sort_unstable();
        rels.dedup();
        rels
    }

    /// Every root-to-position relation sequence, leaves only.
    pub fn metapaths(&self) -> Vec<Vec<RelationId>> {
        let mut out = Vec::new();
        for (q, n) in self.nodes.iter().enumerate() {
            if n.children.is_empty() && q != 0 {
                let mut path = Vec::new();
                let mut cur = q;
                while let Some(r) = self.nodes[cur].via {
                    path.push(r);
                    cur = self.nodes[cur].parent.unwrap_or(0);
                }
                path.reverse();
                out.push(path);
            }
        }
        out
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PathFile {
    Bare(Vec<Vec<[String; 3]>>),
    Wrapped { metapaths: Vec<Vec<[String; 3]>> },
}

/// Parses metapaths given as JSON lists of `[src, etype, dst]` triples,
/// starting at the target type and walking outward.
pub fn parse_metapaths(json: &str, m: &Metagraph) -> Result<Vec<Vec<RelationId>>> {
    let parsed: PathFile = serde_json::from_str(json)?;
    let paths = match parsed {
        PathFile::Bare(p) | PathFile::Wrapped { metapaths: p } => p,
    };
    paths
        .iter()
        .map(|path| {
            path.iter()
                .map(|[s, e, d]| {
                    m.find(s, e, d)
                        .ok_or_else(|| Error::InvalidMetapath(format!("unknown relation ({s}, {e}, {d})")))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::Relation;
    use crate::hetgraph::EdgeTypeId;

    fn tiny() -> Metagraph {
        let rel = |s, e, d| Relation {
            src: NodeTypeId(s),
            etype: EdgeTypeId(e),
            dst: NodeTypeId(d),
        };
        Metagraph::from_parts(
            vec![("p".into(), 5), ("a".into(), 3)],
            vec![(rel(1, 0, 0), "writes".into(), 4), (rel(0, 1, 1), "rev_writes".into(), 4)],
        )
        .unwrap()
    }

    #[test]
    fn depth_zero_is_root_only() {
        let t = build_metatree(&tiny(), NodeTypeId(0), MetatreeMode::Bfs(0)).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.root_children().is_empty());
    }

    #[test]
    fn bfs_alternates_types() {
        let t = build_metatree(&tiny(), NodeTypeId(0), MetatreeMode::Bfs(3)).unwrap();
        let types: Vec<u16> = t.nodes.iter().map(|n| n.ntype.0).collect();
        assert_eq!(types, vec![0, 1, 0, 1]);
        assert_eq!(t.link_layer(1), 3);
        assert_eq!(t.link_layer(3), 1);
        assert_eq!(t.branch_of(3), Some(1));
    }

    #[test]
    fn bad_metapath_step_names_triple() {
        let m = tiny();
        let err = build_metatree(
            &m,
            NodeTypeId(0),
            MetatreeMode::Metapaths(vec![vec![RelationId(1)]]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("(p, rev_writes, a)"));
    }

    #[test]
    fn metapath_union_shares_prefixes() {
        let m = tiny();
        let paths = parse_metapaths(
            r#"[[["a","writes","p"]], [["a","writes","p"],["p","rev_writes","a"]]]"#,
            &m,
        )
        .unwrap();
        let t = build_metatree(&m, NodeTypeId(0), MetatreeMode::Metapaths(paths)).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.k, 2);
        assert_eq!(t.metapaths(), vec![vec![RelationId(0), RelationId(1)]]);
    }
}
