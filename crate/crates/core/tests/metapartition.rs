mod common;

use std::collections::BTreeSet;

use common::{brute_force_makespan, mag_metagraph, AUTHOR, FIELD, INSTITUTION, PAPER};
use hetraf::cache::partition_aware_space;
use hetraf::harness::{random_hetgraph, RandomGraphLimits};
use hetraf::hetgraph::{build_metagraph, HetGraph, NodeTypeId, RelationId};
use hetraf::metapartition::{
    boundary_nodes, build_metatree, cross_partition_edges, deduplicate, load_plan, lpt_assign, makespan,
    materialize_partitions, meta_partition, random_relation_plan, replicate_for_excess_workers, save_plan,
    split_metatree, MetatreeMode, PartitionPlan, PlanKind, WeightPolicy,
};
use proptest::prelude::*;

fn mag_plan(p: usize) -> PartitionPlan {
    meta_partition(&mag_metagraph(), PAPER, MetatreeMode::Bfs(2), p, WeightPolicy::Unique).unwrap()
}

#[test]
fn mag_metatree_has_three_root_children() {
    let m = mag_metagraph();
    let t = build_metatree(&m, PAPER, MetatreeMode::Bfs(2)).unwrap();
    let kids: Vec<NodeTypeId> = t.root_children().iter().map(|&c| t.nodes[c].ntype).collect();
    assert_eq!(kids, vec![FIELD, AUTHOR, PAPER]);
    assert!(t.nodes.iter().all(|n| n.depth <= 2));
}

#[test]
fn mag_submetatree_weights() {
    let m = mag_metagraph();
    let t = build_metatree(&m, PAPER, MetatreeMode::Bfs(2)).unwrap();
    let w: Vec<u64> = split_metatree(&t, &m, WeightPolicy::Unique).iter().map(|s| s.weight).collect();
    assert_eq!(w, vec![16, 17, 27]);
}

#[test]
fn mag_two_way_plan_groups_the_two_light_subtrees() {
    let plan = mag_plan(2);
    let mut groups: Vec<Vec<usize>> = plan.partitions.iter().map(|s| s.submetatrees.clone()).collect();
    groups.sort();
    assert_eq!(groups, vec![vec![0, 1], vec![2]]);
    let light = plan.partitions.iter().find(|s| s.submetatrees == vec![0, 1]).unwrap();
    let heavy = plan.partitions.iter().find(|s| s.submetatrees == vec![2]).unwrap();
    assert_eq!(light.relations.len(), 5);
    assert_eq!(heavy.relations.len(), 3);
    assert_eq!(light.weight, 33);
    assert_eq!(heavy.weight, 27);
}

#[test]
fn cites_is_kept_once_in_the_paper_subtree() {
    let plan = mag_plan(2);
    let heavy = plan.partitions.iter().find(|s| s.submetatrees == vec![2]).unwrap();
    let cites = RelationId(2);
    assert_eq!(heavy.raw_relations.iter().filter(|&&r| r == cites).count(), 2);
    assert_eq!(heavy.relations.iter().filter(|&&r| r == cites).count(), 1);
    assert!(heavy.removed.contains(&cites));
}

#[test]
fn mag_cache_space_follows_leaf_types() {
    let plan = mag_plan(2);
    let light = plan.partitions.iter().position(|s| s.submetatrees == vec![0, 1]).unwrap();
    let heavy = 1 - light;
    for t in [PAPER, INSTITUTION] {
        assert!(partition_aware_space(&plan, light, t));
    }
    for t in [AUTHOR, FIELD] {
        assert!(partition_aware_space(&plan, heavy, t));
        assert!(!partition_aware_space(&plan, light, t));
    }
    assert!(!partition_aware_space(&plan, heavy, INSTITUTION));
}

#[test]
fn single_partition_may_cache_everything() {
    let plan = mag_plan(1);
    for t in 0..4 {
        assert!(partition_aware_space(&plan, 0, NodeTypeId(t)));
    }
}

#[test]
fn random_plan_cache_space_is_endpoint_union() {
    let m = mag_metagraph();
    let t = build_metatree(&m, PAPER, MetatreeMode::Bfs(2)).unwrap();
    for seed in 0..20 {
        let plan = random_relation_plan(&m, &t, 3, seed).unwrap();
        for (i, spec) in plan.partitions.iter().enumerate() {
            let mut want: BTreeSet<NodeTypeId> = BTreeSet::from([PAPER]);
            for &r in &spec.relations {
                want.insert(m.link(r).relation.src);
                want.insert(m.link(r).relation.dst);
            }
            for ty in 0..4 {
                let ty = NodeTypeId(ty);
                assert_eq!(partition_aware_space(&plan, i, ty), want.contains(&ty));
            }
        }
    }
}

#[test]
fn zero_depth_tree_is_just_the_root() {
    let t = build_metatree(&mag_metagraph(), PAPER, MetatreeMode::Bfs(0)).unwrap();
    assert_eq!(t.len(), 1);
    assert!(split_metatree(&t, &mag_metagraph(), WeightPolicy::Unique).is_empty());
}

#[test]
fn lpt_golden_and_single_item() {
    assert_eq!(lpt_assign(&[16, 17, 27], 2).unwrap(), vec![1, 1, 0]);
    assert_eq!(lpt_assign(&[5], 3).unwrap(), vec![0]);
    assert!(lpt_assign(&[1], 0).is_err());
}

#[test]
fn four_workers_replicate_the_heaviest_subtree() {
    let plan = mag_plan(4);
    assert_eq!(plan.num_partitions(), 4);
    let heavy: Vec<_> = plan.partitions.iter().filter(|s| s.submetatrees == vec![2]).collect();
    assert_eq!(heavy.len(), 2);
    assert!(heavy.iter().all(|s| s.replica.is_replica()));
    assert_eq!(heavy[0].replica.slice(10), 0..5);
    assert_eq!(heavy[1].replica.slice(10), 5..10);
}

#[test]
fn plan_round_trips_through_disk() {
    let g = random_graph(3);
    let plan = meta_partition(&build_metagraph(&g), g.target, MetatreeMode::Bfs(2), 2, WeightPolicy::Unique).unwrap();
    let parts = materialize_partitions(&g, &plan).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_plan(dir.path(), &plan, &parts).unwrap();
    let (p2, parts2) = load_plan(dir.path()).unwrap();
    assert_eq!(p2, plan);
    assert_eq!(parts2.len(), parts.len());
    for (a, b) in parts.iter().zip(&parts2) {
        assert_eq!(a.relation_ids, b.relation_ids);
        assert_eq!(a.graph.relations, b.graph.relations);
    }
}

fn random_graph(seed: u64) -> HetGraph {
    random_hetgraph(seed, RandomGraphLimits::default()).unwrap()
}

/// Checks the structural plan invariants against the graph it was built for.
fn check_plan(g: &HetGraph, plan: &PartitionPlan) -> Result<(), TestCaseError> {
    let tree_rels: BTreeSet<RelationId> = plan.tree.unique_relations().into_iter().collect();
    let covered: BTreeSet<RelationId> = plan.covered_relations().into_iter().collect();
    prop_assert_eq!(&covered, &tree_rels);
    for spec in &plan.partitions {
        let set: BTreeSet<_> = spec.relations.iter().collect();
        prop_assert_eq!(set.len(), spec.relations.len());
        prop_assert!(spec.node_types.contains(&g.target));
    }
    if plan.kind == PlanKind::Meta {
        let mut seen: Vec<usize> = plan.partitions.iter().flat_map(|s| s.submetatrees.clone()).collect();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen, (0..plan.submetatrees.len()).collect::<Vec<_>>());
    }
    let parts = materialize_partitions(g, plan).unwrap();
    for part in &parts {
        prop_assert_eq!(part.graph.node_count(g.target), g.node_count(g.target));
        prop_assert_eq!(&part.graph.labels, &g.labels);
        for (li, &r) in part.relation_ids.iter().enumerate() {
            prop_assert_eq!(&part.graph.relations[li].adj, &g.relations[r.index()].adj);
        }
        let b = boundary_nodes(part, plan);
        if plan.kind == PlanKind::Meta {
            prop_assert!(b.iter().all(|(t, _)| *t == g.target));
        }
        if plan.num_partitions() == 1 {
            prop_assert!(b.is_empty());
        }
    }
    if plan.num_partitions() == 2 {
        let e = cross_partition_edges(g, plan);
        for part in &parts {
            prop_assert!(boundary_nodes(part, plan).len() <= e);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lpt_is_within_graham_bound(w in prop::collection::vec(0u64..100, 1..=8), p in 1usize..=4) {
        let a = lpt_assign(&w, p).unwrap();
        prop_assert!(a.iter().all(|&b| b < p));
        let opt = brute_force_makespan(&w, p) as f64;
        let got = makespan(&w, &a, p) as f64;
        prop_assert!(got <= (4.0 / 3.0 - 1.0 / (3.0 * p as f64)) * opt + 1e-9);
    }

    #[test]
    fn random_trees_are_valid_metapaths(seed in 0u64..10_000, k in 0usize..=3) {
        let g = random_graph(seed);
        let m = build_metagraph(&g);
        let t = build_metatree(&m, g.target, MetatreeMode::Bfs(k)).unwrap();
        prop_assert_eq!(t.nodes[0].ntype, g.target);
        for n in &t.nodes[1..] {
            prop_assert!(n.depth <= k);
            let parent = &t.nodes[n.parent.unwrap()];
            let rel = m.link(n.via.unwrap()).relation;
            prop_assert_eq!(rel.src, n.ntype);
            prop_assert_eq!(rel.dst, parent.ntype);
        }
        let subs = split_metatree(&t, &m, WeightPolicy::Unique);
        prop_assert_eq!(subs.len(), t.root_children().len());
        let mut all: Vec<usize> = subs.iter().flat_map(|s| s.positions.clone()).collect();
        all.sort();
        prop_assert_eq!(all, (1..t.len()).collect::<Vec<_>>());
        for s in &subs {
            let types: BTreeSet<NodeTypeId> = s.vertex_types.iter().copied().collect();
            let rels: BTreeSet<RelationId> = s.relations.iter().copied().collect();
            let w: u64 = types.iter().map(|&v| m.vertex_weight(v)).sum::<u64>()
                + rels.iter().map(|&r| m.link_weight(r)).sum::<u64>();
            prop_assert_eq!(s.weight, w);
        }
    }

    #[test]
    fn meta_plans_hold_their_invariants(seed in 0u64..10_000, p in 1usize..=4, k in 1usize..=2) {
        let g = random_graph(seed);
        let plan = meta_partition(&build_metagraph(&g), g.target, MetatreeMode::Bfs(k), p, WeightPolicy::Unique).unwrap();
        check_plan(&g, &plan)?;
        prop_assert_eq!(deduplicate(&plan), plan);
    }

    #[test]
    fn random_plans_hold_their_invariants(seed in 0u64..10_000, p in 1usize..=3) {
        let g = random_graph(seed);
        let m = build_metagraph(&g);
        let t = build_metatree(&m, g.target, MetatreeMode::Bfs(2)).unwrap();
        let plan = random_relation_plan(&m, &t, p, seed).unwrap();
        check_plan(&g, &plan)?;
    }

    #[test]
    fn replicas_cover_every_subtree(seed in 0u64..10_000, extra in 1usize..=2) {
        let g = random_graph(seed);
        let m = build_metagraph(&g);
        let base = meta_partition(&m, g.target, MetatreeMode::Bfs(2), 1_000, WeightPolicy::Unique).unwrap();
        let n = base.submetatrees.len();
        prop_assume!(n > 0);
        let plan = meta_partition(&m, g.target, MetatreeMode::Bfs(2), n, WeightPolicy::Unique).unwrap();
        let rep = replicate_for_excess_workers(&plan, n + extra);
        prop_assert_eq!(rep.num_partitions(), n + extra);
        let counts: Vec<usize> = (0..n)
            .map(|s| rep.partitions.iter().filter(|x| x.submetatrees.contains(&s)).count())
            .collect();
        prop_assert!(counts.iter().all(|&c| c >= 1));
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }
}
