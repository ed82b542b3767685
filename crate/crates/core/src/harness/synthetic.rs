use std::collections::HashSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hetgraph::{mix_seed, HetGraph, HetGraphBuilder, StorageKind, TypeFeatures};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeTypeSpec {
    pub name: String,
    pub count: usize,
    pub dim: usize,
    pub storage: StorageKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DegreeDist {
    Uniform,
    /// Destination popularity ∝ rank^-alpha over a random ranking.
    PowerLaw { alpha: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationSpec {
    pub src: String,
    pub etype: String,
    pub dst: String,
    pub edges: usize,
    pub degree: DegreeDist,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub name: String,
    pub node_types: Vec<NodeTypeSpec>,
    pub relations: Vec<RelationSpec>,
    pub target: String,
    pub num_classes: usize,
    /// Probability that a target label is replaced by a uniform draw.
    pub label_noise: f64,
    pub add_reverse: bool,
}

impl SyntheticSpec {
    /// Every inconsistency in the spec.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut names = HashSet::new();
        for t in &self.node_types {
            if !names.insert(t.name.as_str()) {
                v.push(format!("node type `{}` declared twice", t.name));
            }
            match t.storage {
                StorageKind::Absent if t.dim != 0 => v.push(format!("`{}` has no features but dim {}", t.name, t.dim)),
                StorageKind::Dense | StorageKind::Learnable if t.dim == 0 => {
                    v.push(format!("`{}` needs a positive feature dim", t.name))
                }
                _ => {}
            }
        }
        match self.node_types.iter().find(|t| t.name == self.target) {
            None => v.push(format!("target type `{}` not declared", self.target)),
            Some(t) if t.count == 0 => v.push("target type needs at least one node".into()),
            _ => {}
        }
        if self.num_classes == 0 {
            v.push("num_classes must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            v.push(format!("label_noise {} outside [0, 1]", self.label_noise));
        }
        let count = |n: &str| self.node_types.iter().find(|t| t.name == n).map(|t| t.count);
        let mut triples = HashSet::new();
        for r in &self.relations {
            match (count(&r.src), count(&r.dst)) {
                (Some(s), Some(d)) => {
                    if r.edges > s * d {
                        v.push(format!(
                            "({}, {}, {}) asks for {} edges but only {} pairs exist",
                            r.src,
                            r.etype,
                            r.dst,
                            r.edges,
                            s * d
                        ));
                    }
                }
                _ => v.push(format!("({}, {}, {}) references an undeclared type", r.src, r.etype, r.dst)),
            }
            if !triples.insert((&r.src, &r.etype, &r.dst)) {
                v.push(format!("({}, {}, {}) declared twice", r.src, r.etype, r.dst));
            }
            if let DegreeDist::PowerLaw { alpha } = r.degree {
                if !(alpha.is_finite() && alpha >= 0.0) {
                    v.push(format!("power-law exponent {alpha} invalid"));
                }
            }
        }
        v
    }
}

fn popularity(n: usize, dist: DegreeDist, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    match dist {
        DegreeDist::Uniform => None,
        DegreeDist::PowerLaw { alpha } => {
            let mut rank: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(rank.as_mut_slice(), rng);
            let mut cum = Vec::with_capacity(n);
            let mut acc = 0.0;
            for &r in &rank {
                acc += ((r + 1) as f64).powf(-alpha);
                cum.push(acc);
            }
            Some(cum)
        }
    }
}

fn pick(cum: &Option<Vec<f64>>, n: usize, rng: &mut ChaCha8Rng) -> u32 {
    match cum {
        None => rng.random_range(0..n) as u32,
        Some(c) => {
            let x = rng.random::<f64>() * c[n - 1];
            c.partition_point(|&v| v <= x).min(n - 1) as u32
        }
    }
}

/// Deterministic graph with exactly the node and edge counts of `spec`.
pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<HetGraph> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(Error::InvalidSpec(v));
    }
    let mut b = HetGraphBuilder::new();
    let mut features = Vec::new();
    for (ti, t) in spec.node_types.iter().enumerate() {
        let f = match t.storage {
            StorageKind::Absent => TypeFeatures::absent(),
            StorageKind::Learnable => TypeFeatures::learnable(t.dim),
            StorageKind::Dense => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0xFEA7, ti as u64]));
                let data = Array2::from_shape_fn((t.count, t.dim), |_| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    x as f32 as f64
                });
                TypeFeatures::dense(data)
            }
        };
        features.push(f.data.clone());
        b.node_type(&t.name, t.count, f);
    }
    let count = |n: &str| spec.node_types.iter().find(|t| t.name == n).map_or(0, |t| t.count);
    for (ri, r) in spec.relations.iter().enumerate() {
        let (ns, nd) = (count(&r.src), count(&r.dst));
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0xED6E, ri as u64]));
        let cum = popularity(nd, r.degree, &mut rng);
        let mut seen = HashSet::with_capacity(r.edges);
        let mut edges = Vec::with_capacity(r.edges);
        // dense requests are filled by enumerating the complement instead of rejection sampling
        if r.edges * 2 > ns * nd {
            let mut all: Vec<(u32, u32)> = (0..ns as u32).flat_map(|s| (0..nd as u32).map(move |d| (s, d))).collect();
            rand::seq::SliceRandom::shuffle(all.as_mut_slice(), &mut rng);
            all.truncate(r.edges);
            edges = all;
        } else {
            while edges.len() < r.edges {
                let d = pick(&cum, nd, &mut rng);
                let s = rng.random_range(0..ns) as u32;
                if seen.insert((s, d)) {
                    edges.push((s, d));
                }
            }
        }
        b.relation(&r.src, &r.etype, &r.dst, &edges)?;
    }
    let target = b.target(&spec.target, spec.num_classes)?;
    let n = count(&spec.target);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0x1ABE1]));
    let labels: Vec<u32> = match &features[target.index()] {
        Some(x) => {
            // labels follow a random linear readout of the target features
            let proj = Array2::from_shape_fn((x.ncols(), spec.num_classes), |_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                v
            });
            let scores = x.dot(&proj);
            scores
                .rows()
                .into_iter()
                .map(|row| {
                    let mut best = 0;
                    for j in 1..row.len() {
                        if row[j] > row[best] {
                            best = j;
                        }
                    }
                    best as u32
                })
                .collect()
        }
        None => (0..n).map(|_| rng.random_range(0..spec.num_classes) as u32).collect(),
    };
    let labels = labels
        .into_iter()
        .map(|l| {
            if rng.random::<f64>() < spec.label_noise {
                rng.random_range(0..spec.num_classes) as u32
            } else {
                l
            }
        })
        .collect();
    b.labels(labels);
    let g = b.build()?;
    if spec.add_reverse {
        g.add_reverse_relations()
    } else {
        Ok(g)
    }
}

/// Shape limits for [`random_spec`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomGraphLimits {
    pub max_types: usize,
    pub max_relations: usize,
    pub max_nodes: usize,
    pub max_dim: usize,
    pub num_classes: usize,
}

impl Default for RandomGraphLimits {
    fn default() -> Self {
        RandomGraphLimits {
            max_types: 5,
            max_relations: 8,
            max_nodes: 200,
            max_dim: 6,
            num_classes: 4,
        }
    }
}

/// A random small schema whose target type (type `t0`) has at least one incoming relation.
pub fn random_spec(seed: u64, limits: RandomGraphLimits) -> SyntheticSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0x5BEC]));
    let nt = rng.random_range(1..=limits.max_types.max(1));
    let per_type = (limits.max_nodes / nt).max(2);
    let node_types: Vec<NodeTypeSpec> = (0..nt)
        .map(|i| NodeTypeSpec {
            name: format!("t{i}"),
            count: rng.random_range(2..=per_type.clamp(2, 40)),
            dim: rng.random_range(1..=limits.max_dim.max(1)),
            storage: if rng.random_bool(0.5) {
                StorageKind::Dense
            } else {
                StorageKind::Learnable
            },
        })
        .collect();
    let nr = rng.random_range(1..=limits.max_relations.max(1));
    let mut relations: Vec<RelationSpec> = Vec::new();
    let mut pairs = HashSet::new();
    for j in 0..nr {
        let (s, d) = if j == 0 {
            (rng.random_range(0..nt), 0)
        } else {
            (rng.random_range(0..nt), rng.random_range(0..nt))
        };
        if !pairs.insert((s, d)) {
            continue;
        }
        let cap = node_types[s].count * node_types[d].count;
        relations.push(RelationSpec {
            src: node_types[s].name.clone(),
            etype: format!("r{j}"),
            dst: node_types[d].name.clone(),
            edges: rng.random_range(0..=(cap / 2).max(1).min(cap)),
            degree: if rng.random_bool(0.5) {
                DegreeDist::Uniform
            } else {
                DegreeDist::PowerLaw { alpha: 1.2 }
            },
        });
    }
    SyntheticSpec {
        name: format!("random-{seed}"),
        node_types,
        relations,
        target: "t0".into(),
        num_classes: limits.num_classes,
        label_noise: 0.0,
        add_reverse: false,
    }
}

pub fn random_hetgraph(seed: u64, limits: RandomGraphLimits) -> Result<HetGraph> {
    gen_synthetic(&random_spec(seed, limits), seed)
}
