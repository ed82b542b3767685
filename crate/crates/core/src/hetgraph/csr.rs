use serde::{Deserialize, Serialize};

/// Destination-major compressed sparse row adjacency of one relation.
///
/// Row `d` lists the source endpoints of every edge whose destination is `d`,
/// sorted ascending. Parallel edges are kept as repeated entries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Csr {
    offsets: Vec<usize>,
    sources: Vec<u32>,
}

impl Csr {
    pub fn empty(num_dst: usize) -> Self {
        Csr {
            offsets: vec![0; num_dst + 1],
            sources: Vec::new(),
        }
    }

    /// Builds the adjacency from `(src, dst)` pairs. Callers are responsible
    /// for range-checking `dst < num_dst`.
    pub fn from_edges(num_dst: usize, edges: &[(u32, u32)]) -> Self {
        let mut offsets = vec![0usize; num_dst + 1];
        for &(_, d) in edges {
            offsets[d as usize + 1] += 1;
        }
        for i in 0..num_dst {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut sources = vec![0u32; edges.len()];
        for &(s, d) in edges {
            let slot = &mut cursor[d as usize];
            sources[*slot] = s;
            *slot += 1;
        }
        for d in 0..num_dst {
            sources[offsets[d]..offsets[d + 1]].sort_unstable();
        }
        Csr { offsets, sources }
    }

    pub fn num_dst(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.sources.len()
    }

    pub fn neighbors(&self, dst: u32) -> &[u32] {
        let d = dst as usize;
        &self.sources[self.offsets[d]..self.offsets[d + 1]]
    }

    pub fn degree(&self, dst: u32) -> usize {
        let d = dst as usize;
        self.offsets[d + 1] - self.offsets[d]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn sources(&self) -> &[u32] {
        &self.sources
    }

    /// Edges as `(src, dst)` in destination-major order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.num_dst()).flat_map(move |d| {
            self.neighbors(d as u32).iter().map(move |&s| (s, d as u32))
        })
    }

    /// Adjacency of the reverse relation, keyed by the former sources.
    pub fn transpose(&self, num_src: usize) -> Csr {
        let flipped: Vec<(u32, u32)> = self.edges().map(|(s, d)| (d, s)).collect();
        Csr::from_edges(num_src, &flipped)
    }

    /// Largest source id referenced, if any.
    pub fn max_source(&self) -> Option<u32> {
        self.sources.iter().copied().max()
    }
}
