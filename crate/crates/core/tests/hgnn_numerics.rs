use hetraf::harness::{random_hetgraph, RandomGraphLimits};
use hetraf::hetgraph::{
    build_metagraph, FanoutSampler, HetGraphBuilder, NodeTypeId, RelationBlock, RelationId, TypeFeatures,
};
use hetraf::hgnn::{
    agg_relation, forward_vanilla, gradient_check, loss_and_grad, softmax_cross_entropy, AdamConfig, Embedding,
    GraphInputs, HgnnConfig, HgnnModel, LearnableTables, ParamKey,
};
use hetraf::metapartition::{build_metatree, MetatreeMode};
use ndarray::{array, Array2};
use proptest::prelude::*;

#[test]
fn one_layer_identity_returns_neighbor_feature() {
    let mut b = HetGraphBuilder::new();
    b.node_type("t", 1, TypeFeatures::dense(array![[0.0, 0.0]]));
    b.node_type("s", 1, TypeFeatures::dense(array![[0.25, -4.0]]));
    b.relation("s", "to", "t", &[(0, 0)]).unwrap();
    b.target("t", 2).unwrap();
    b.labels(vec![1]);
    let g = b.build().unwrap();
    let tree = build_metatree(&build_metagraph(&g), g.target, MetatreeMode::Bfs(1)).unwrap();
    let mut model = HgnnModel::for_graph(&tree, &g, 2, 0).unwrap();
    model.weights.insert(ParamKey { relation: RelationId(0), layer: 1 }, Array2::eye(2));
    let tables = LearnableTables::default();
    let inputs = GraphInputs { graph: &g, tables: &tables };
    let (logits, _) = forward_vanilla(&model, &tree, &FanoutSampler::new(&g, &[25], 1), &inputs, &[0]).unwrap();
    assert_eq!(logits, array![[0.25, -4.0]]);
}

#[test]
fn zero_weights_give_zero_logits() {
    let g = random_hetgraph(7, RandomGraphLimits::default()).unwrap();
    let tree = build_metatree(&build_metagraph(&g), g.target, MetatreeMode::Bfs(2)).unwrap();
    let model = HgnnModel::for_graph(&tree, &g, 5, 3).unwrap().scaled(0.0);
    let tables = LearnableTables::for_graph(&g, 3, AdamConfig::default(), None);
    let inputs = GraphInputs { graph: &g, tables: &tables };
    let batch: Vec<u32> = (0..g.node_count(g.target) as u32).collect();
    let (logits, _) = forward_vanilla(&model, &tree, &FanoutSampler::new(&g, &[4, 3], 1), &inputs, &batch).unwrap();
    assert!(logits.iter().all(|&x| x == 0.0));
}

#[test]
fn uniform_logits_cost_ln_c() {
    let logits = Array2::from_elem((3, 5), 0.7);
    let (loss, _) = softmax_cross_entropy(&logits, &[0, 4, 2], 3).unwrap();
    assert!((loss - 5f64.ln()).abs() < 1e-12);
}

#[test]
fn confident_correct_logits_cost_nearly_nothing() {
    let (loss, _) = softmax_cross_entropy(&array![[60.0, 0.0, 0.0]], &[0], 1).unwrap();
    assert!(loss < 1e-20);
}

#[test]
fn out_of_range_label_is_rejected() {
    assert!(softmax_cross_entropy(&array![[0.0, 0.0]], &[2], 1).is_err());
}

#[test]
fn softmax_gradient_matches_differences() {
    let logits = array![[0.3, -1.2, 2.0, 0.1], [1.5, 0.4, -0.7, 0.0]];
    let labels = [2u32, 0];
    let (_, grad) = softmax_cross_entropy(&logits, &labels, 2).unwrap();
    let h = 1e-6;
    for i in 0..2 {
        for j in 0..4 {
            let mut p = logits.clone();
            p[[i, j]] += h;
            let mut m = logits.clone();
            m[[i, j]] -= h;
            let num = (softmax_cross_entropy(&p, &labels, 2).unwrap().0 - softmax_cross_entropy(&m, &labels, 2).unwrap().0) / (2.0 * h);
            assert!((num - grad[[i, j]]).abs() <= 1e-5 * num.abs().max(grad[[i, j]].abs()) + 1e-8);
        }
    }
}

#[test]
fn gradients_match_central_differences_on_random_models() {
    for seed in 0..6u64 {
        let limits = RandomGraphLimits { max_nodes: 50, ..Default::default() };
        let g = random_hetgraph(100 + seed, limits).unwrap();
        let k = 1 + (seed as usize % 2);
        let tree = build_metatree(&build_metagraph(&g), g.target, MetatreeMode::Bfs(k)).unwrap();
        let model = HgnnModel::init(
            &tree,
            &g.features.types.iter().map(|f| f.dim).collect::<Vec<_>>(),
            HgnnConfig { hidden: 3, num_classes: g.num_classes, seed },
        )
        .unwrap();
        let tables = LearnableTables::for_graph(&g, seed, AdamConfig::default(), None);
        let sampler = FanoutSampler::new(&g, &vec![3; k], seed);
        let batch: Vec<u32> = (0..g.node_count(g.target).min(6) as u32).collect();
        let rep = gradient_check(&g, &tree, &model, &tables, &sampler, &batch, 1e-6, 1e-5, 1e-8).unwrap();
        assert!(rep.passed(), "seed {seed}: {rep:?}");
        assert!(rep.checked > 0);
    }
}

#[test]
fn full_forward_equals_sum_of_relation_aggregates() {
    // one-layer model: logits must be the sum of independent per-relation aggregates
    let g = random_hetgraph(3, RandomGraphLimits::default()).unwrap();
    let m = build_metagraph(&g);
    let tree = build_metatree(&m, g.target, MetatreeMode::Bfs(1)).unwrap();
    let model = HgnnModel::for_graph(&tree, &g, 4, 9).unwrap();
    let tables = LearnableTables::for_graph(&g, 9, AdamConfig::default(), None);
    let inputs = GraphInputs { graph: &g, tables: &tables };
    let sampler = FanoutSampler::new(&g, &[3], 11);
    let batch: Vec<u32> = (0..g.node_count(g.target) as u32).collect();
    let (logits, _) = forward_vanilla(&model, &tree, &sampler, &inputs, &batch).unwrap();
    let mut total = Array2::<f64>::zeros(logits.dim());
    for &c in tree.root_children() {
        let r = tree.nodes[c].via.unwrap();
        let src = g.relation(r).src;
        let mut block = RelationBlock { relation: r, dst: batch.clone(), offsets: vec![0], src: Vec::new() };
        for &d in &batch {
            use hetraf::hetgraph::NeighborSampler;
            block.src.extend(sampler.sample(1, r, d).unwrap());
            block.offsets.push(block.src.len());
        }
        let ids: Vec<u32> = (0..g.node_count(src) as u32).collect();
        let h = Embedding { layer: 0, ntype: src, ids: ids.clone(), data: hetraf::hgnn::FeatureSource::input_rows(&inputs, src, &ids).unwrap() };
        let part = agg_relation(&block, &h, &model.weights[&ParamKey { relation: r, layer: 1 }]).unwrap();
        total += &part.data;
    }
    let diff = (&total - &logits).iter().fold(0.0f64, |a, x| a.max(x.abs()));
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn learnable_rows_only_touched_rows_get_gradients() {
    let g = random_hetgraph(21, RandomGraphLimits::default()).unwrap();
    let tree = build_metatree(&build_metagraph(&g), g.target, MetatreeMode::Bfs(2)).unwrap();
    let model = HgnnModel::for_graph(&tree, &g, 4, 1).unwrap();
    let tables = LearnableTables::for_graph(&g, 1, AdamConfig::default(), None);
    let inputs = GraphInputs { graph: &g, tables: &tables };
    let sampler = FanoutSampler::new(&g, &[2, 2], 1);
    let (logits, tape) = forward_vanilla(&model, &tree, &sampler, &inputs, &[0]).unwrap();
    let labels = [g.labels.as_ref().unwrap()[0]];
    let (_, grads) = loss_and_grad(&model, &tree, &tape, &logits, &labels, &inputs).unwrap();
    for (t, rows) in &grads.learnable {
        let leaf_nodes: std::collections::BTreeSet<u32> = tree
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.depth == tree.k && n.ntype == *t)
            .flat_map(|(q, _)| tape.positions[q].nodes.clone())
            .collect();
        assert!(rows.keys().all(|id| leaf_nodes.contains(id)));
    }
}

proptest! {
    #[test]
    fn neighbor_order_does_not_change_mean(perm in Just((0u32..6).collect::<Vec<_>>()).prop_shuffle(), vals in prop::collection::vec(-10.0f64..10.0, 12)) {
        let h = Embedding { layer: 0, ntype: NodeTypeId(0), ids: (0..6).collect(), data: Array2::from_shape_vec((6, 2), vals).unwrap() };
        let w = array![[1.0, 0.5], [-0.25, 2.0]];
        let sorted = RelationBlock { relation: RelationId(0), dst: vec![0], offsets: vec![0, 6], src: (0..6).collect() };
        let shuffled = RelationBlock { src: perm, ..sorted.clone() };
        let a = agg_relation(&sorted, &h, &w).unwrap();
        let b = agg_relation(&shuffled, &h, &w).unwrap();
        for (x, y) in a.data.iter().zip(b.data.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}
