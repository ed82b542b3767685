use std::collections::BTreeSet;

use hetraf::harness::{bundled_spec, gen_synthetic, mag_mini, random_hetgraph, RandomGraphLimits, SyntheticSpec};
use hetraf::hetgraph::{
    build_metagraph, read_container, sample_khop, write_container, HetGraph, HetGraphBuilder, NodeTypeId,
    ReverseTag, SampleOptions, StorageKind, TypeFeatures,
};
use proptest::prelude::*;
use sha2::{Digest, Sha256};

fn container_bytes(g: &HetGraph) -> Vec<u8> {
    let mut out = Vec::new();
    write_container(&mut out, g, None).unwrap();
    out
}

fn chain(len: usize) -> HetGraph {
    let mut b = HetGraphBuilder::new();
    b.node_type("n", len, TypeFeatures::learnable(2));
    let e: Vec<(u32, u32)> = (1..len as u32).map(|i| (i, i - 1)).collect();
    b.relation("n", "next", "n", &e).unwrap();
    b.target("n", 2).unwrap();
    b.build().unwrap()
}

#[test]
fn low_degree_node_keeps_every_neighbour() {
    let mut b = HetGraphBuilder::new();
    b.node_type("t", 1, TypeFeatures::learnable(2));
    b.node_type("s", 3, TypeFeatures::learnable(2));
    b.relation("s", "to", "t", &[(0, 0), (1, 0), (2, 0)]).unwrap();
    b.target("t", 2).unwrap();
    let g = b.build().unwrap();
    let s = sample_khop(&g, &[0], &[25], 1, SampleOptions::default()).unwrap();
    assert_eq!(s.hops[0].blocks[0].src, vec![0, 1, 2]);
}

#[test]
fn chain_samples_one_node_per_hop() {
    let g = chain(5);
    let s = sample_khop(&g, &[0], &[25, 20], 1, SampleOptions::default()).unwrap();
    assert_eq!(s.hops[0].blocks[0].src, vec![1]);
    assert_eq!(s.hops[1].blocks[0].src, vec![2]);
}

#[test]
fn mag_mini_schema() {
    let g = gen_synthetic(&mag_mini(), 0).unwrap();
    assert_eq!(g.num_node_types(), 4);
    assert_eq!(g.relations.len(), 7);
    let featured = g.features.types.iter().filter(|f| f.kind == StorageKind::Dense).count();
    assert_eq!(featured, 1);
    assert_eq!(g.type_name(g.target), "paper");
    let selfish = g.relations.iter().filter(|r| r.reverse == ReverseTag::SelfPaired).count();
    assert_eq!(selfish, 1);
}

#[test]
fn featureless_single_type_graph() {
    let spec: SyntheticSpec = serde_json::from_str(
        r#"{"name":"bare","node_types":[{"name":"x","count":5,"dim":0,"storage":"absent"}],
            "relations":[],"target":"x","num_classes":2,"label_noise":0.0,"add_reverse":false}"#,
    )
    .unwrap();
    let g = gen_synthetic(&spec, 3).unwrap();
    assert_eq!((g.num_nodes(), g.num_edges()), (5, 0));
    assert_eq!(g.features.get(NodeTypeId(0)).dim, 0);
}

#[test]
fn synthetic_counts_match_spec_exactly() {
    for name in ["mag-mini", "freebase-mini", "donor-mini", "igb-mini"] {
        let spec = bundled_spec(name).unwrap();
        let g = gen_synthetic(&spec, 9).unwrap();
        for t in &spec.node_types {
            let id = g.node_type(&t.name).unwrap();
            assert_eq!(g.node_count(id), t.count, "{name}/{}", t.name);
        }
        for r in &spec.relations {
            let id = g.find_relation(&r.src, &r.etype, &r.dst).unwrap();
            assert_eq!(g.relations[id.index()].adj.num_edges(), r.edges, "{name}/{}", r.etype);
        }
    }
}

#[test]
fn same_seed_gives_identical_container_bytes() {
    let a = Sha256::digest(container_bytes(&gen_synthetic(&mag_mini(), 42).unwrap()));
    let b = Sha256::digest(container_bytes(&gen_synthetic(&mag_mini(), 42).unwrap()));
    let c = Sha256::digest(container_bytes(&gen_synthetic(&mag_mini(), 43).unwrap()));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn inconsistent_spec_lists_every_violation() {
    let mut spec = mag_mini();
    spec.target = "nobody".into();
    spec.relations[0].src = "ghost".into();
    let err = gen_synthetic(&spec, 0).unwrap_err().to_string();
    assert!(err.contains("nobody") && err.contains("ghost"), "{err}");
}

#[test]
fn container_round_trip_is_bit_exact() {
    for name in ["mag-mini", "donor-mini"] {
        let g = gen_synthetic(&bundled_spec(name).unwrap(), 5).unwrap();
        let bytes = container_bytes(&g);
        let (back, ids) = read_container(&bytes[..]).unwrap();
        assert!(ids.is_none());
        assert_eq!(back, g);
        assert_eq!(container_bytes(&back), bytes);
    }
}

#[test]
fn truncated_container_is_rejected() {
    let bytes = container_bytes(&chain(4));
    assert!(read_container(&bytes[..bytes.len() - 3]).is_err());
    assert!(read_container(&b"nope"[..]).is_err());
}

fn graph(seed: u64) -> HetGraph {
    random_hetgraph(seed, RandomGraphLimits::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn edges_are_conserved(seed in 0u64..10_000) {
        let g = graph(seed);
        let parts: usize = g.decompose_relations().iter().map(|p| p.adj.num_edges()).sum();
        prop_assert_eq!(parts, g.num_edges());
        let m = build_metagraph(&g);
        prop_assert_eq!(m.total_link_weight() as usize, g.num_edges());
        for (i, t) in g.node_types.iter().enumerate() {
            prop_assert_eq!(m.vertex_weight(NodeTypeId(i as u16)) as usize, t.count);
        }
    }

    #[test]
    fn reverses_mirror_their_forward_relation(seed in 0u64..10_000) {
        let g = graph(seed).add_reverse_relations().unwrap();
        for r in &g.relations {
            if let ReverseTag::ReverseOf(f) = r.reverse {
                let fwd = &g.relations[f.index()];
                let a: BTreeSet<(u32, u32)> = r.adj.edges().map(|(s, d)| (d, s)).collect();
                let b: BTreeSet<(u32, u32)> = fwd.adj.edges().collect();
                prop_assert_eq!(a, b);
            }
        }
        prop_assert!(g.validate().is_ok());
    }

    #[test]
    fn sampling_respects_caps_types_and_seed(seed in 0u64..10_000, f1 in 1usize..6, f2 in 1usize..6, rng in 0u64..1000) {
        let g = graph(seed);
        let n = g.node_count(g.target) as u32;
        let seeds: Vec<u32> = (0..n.min(8)).collect();
        let fanouts = [f1, f2];
        let s = sample_khop(&g, &seeds, &fanouts, rng, SampleOptions::default()).unwrap();
        prop_assert_eq!(&s, &sample_khop(&g, &seeds, &fanouts, rng, SampleOptions::default()).unwrap());
        let mut frontier: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); g.num_node_types()];
        frontier[g.target.index()].extend(seeds.iter().copied());
        for (h, hop) in s.hops.iter().enumerate() {
            let mut next: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); g.num_node_types()];
            for b in &hop.blocks {
                let rel = g.relation(b.relation);
                let adj = &g.relations[b.relation.index()].adj;
                for (i, &d) in b.dst.iter().enumerate() {
                    prop_assert!(frontier[rel.dst.index()].contains(&d));
                    let nb = &b.src[b.offsets[i]..b.offsets[i + 1]];
                    prop_assert!(nb.len() <= fanouts[h]);
                    prop_assert_eq!(nb.len(), adj.degree(d).min(fanouts[h]));
                    for &x in nb {
                        prop_assert!(adj.neighbors(d).contains(&x));
                        next[rel.src.index()].insert(x);
                    }
                }
            }
            frontier = next;
        }
    }
}
