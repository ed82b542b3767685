use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;

use super::message::{Accounting, Bus, CommStats, Message, MessageKind};
use super::raf::Sampling;
use super::report::{Engine, ExecutionReport};
use crate::error::{Error, Result};
use crate::hetgraph::{FanoutSampler, HetGraph, NeighborSampler, NodeTypeId, RelationId};
use crate::hgnn::{
    backward, batch_labels, forward_vanilla, softmax_cross_entropy, AdamConfig, AdamState, Gradients, GraphInputs,
    HgnnModel, LearnableTables,
};
use crate::metapartition::{edge_cut, Metatree, NodeOwnership};

/// Data-parallel baseline: nodes are spread over workers, every worker runs
/// the full model on its own batch nodes and fetches remote topology and
/// features.
#[derive(Clone, Debug)]
pub struct VanillaCluster {
    pub graph: HetGraph,
    pub tree: Metatree,
    pub ownership: NodeOwnership,
    /// Replicated model; copies stay identical after each all-reduce.
    pub model: HgnnModel,
    pub adam: AdamState,
    /// Learnable rows, each resident on its node's owner.
    pub tables: LearnableTables,
    pub fanouts: Vec<usize>,
    pub acct: Accounting,
    pub boundary: Vec<usize>,
    pub cross_edges: usize,
    pub k_rel: usize,
    pub batches_run: u64,
    pub stats: CommStats,
}

impl VanillaCluster {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        g: &HetGraph,
        tree: &Metatree,
        ownership: NodeOwnership,
        model: &HgnnModel,
        tables: &LearnableTables,
        adam: AdamConfig,
        fanouts: &[usize],
        acct: Accounting,
    ) -> Result<Self> {
        if model.k != tree.k {
            return Err(Error::PlanMismatch(format!("model has {} layers, tree depth {}", model.k, tree.k)));
        }
        if fanouts.len() != tree.k {
            return Err(Error::InvalidArgument(format!("{} fanouts for {} layers", fanouts.len(), tree.k)));
        }
        if ownership.owner.len() != g.num_node_types()
            || ownership.owner.iter().enumerate().any(|(t, o)| o.len() != g.node_count(NodeTypeId(t as u16)))
        {
            return Err(Error::PlanMismatch("node ownership does not match the graph".into()));
        }
        let cut = edge_cut(g, &ownership, &tree.unique_relations());
        Ok(VanillaCluster {
            graph: g.clone(),
            tree: tree.clone(),
            ownership,
            model: model.clone(),
            adam: AdamState::new(adam),
            tables: tables.clone(),
            fanouts: fanouts.to_vec(),
            acct,
            boundary: cut.boundary,
            cross_edges: cut.cut_edges,
            k_rel: tree.unique_relations().len(),
            batches_run: 0,
            stats: CommStats::default(),
        })
    }

    pub fn num_workers(&self) -> usize {
        self.ownership.parts
    }

    pub fn run_batch(&mut self, batch: &[u32], sampling: Sampling<'_>) -> Result<ExecutionReport> {
        run_vanilla_batch(self, batch, sampling)
    }
}

fn exchange(bus: &mut Bus, msg: Message) -> Result<()> {
    let (from, to, kind) = (msg.from, msg.to, msg.kind);
    bus.send(msg);
    bus.recv(from, to, kind).map(|_| ())
}

/// One data-parallel training step with remote-fetch accounting.
pub fn run_vanilla_batch(cluster: &mut VanillaCluster, batch: &[u32], sampling: Sampling<'_>) -> Result<ExecutionReport> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let c = &*cluster;
    let g = &c.graph;
    let tree = &c.tree;
    let own = &c.ownership;
    let p = own.parts;
    let acct = c.acct;
    let fresh;
    let sampler: &dyn NeighborSampler = match sampling {
        Sampling::Shared(b) => b,
        Sampling::Fresh { seed } => {
            fresh = FanoutSampler::new(g, &c.fanouts, seed);
            &fresh
        }
    };
    let inputs = GraphInputs {
        graph: g,
        tables: &c.tables,
    };
    let labels_all = batch_labels(g, batch)?;
    let mut bus = Bus::default();
    let mut logits = Array2::zeros((batch.len(), c.model.num_classes));
    let mut loss = 0.0;
    let mut global = Gradients::default();

    for w in 0..p {
        let rows: Vec<usize> = (0..batch.len())
            .filter(|&i| own.owner_of(g.target, batch[i]) == w)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let local: Vec<u32> = rows.iter().map(|&i| batch[i]).collect();
        let labels: Vec<u32> = rows.iter().map(|&i| labels_all[i]).collect();
        let (lw, tape) = forward_vanilla(&c.model, tree, sampler, &inputs, &local)?;

        let mut topo: BTreeMap<(usize, RelationId, usize), BTreeMap<u32, usize>> = BTreeMap::new();
        let mut feats: BTreeMap<(NodeTypeId, usize), BTreeSet<u32>> = BTreeMap::new();
        for q in 1..tree.len() {
            let node = &tree.nodes[q];
            let parent = node.parent.expect("non-root has a parent");
            let pt = tree.nodes[parent].ntype;
            let link = tape.positions[q].link.as_ref().expect("sampled link");
            for (i, &d) in tape.positions[parent].nodes.iter().enumerate() {
                let o = own.owner_of(pt, d);
                if o != w {
                    topo.entry((node.depth, node.via.expect("link relation"), o))
                        .or_default()
                        .insert(d, link.neighbors(i).len());
                }
            }
            if node.depth == tree.k {
                for &v in &tape.positions[q].nodes {
                    let o = own.owner_of(node.ntype, v);
                    if o != w {
                        feats.entry((node.ntype, o)).or_default().insert(v);
                    }
                }
            }
        }
        for ((hop, rel, o), dsts) in topo {
            let ids: Vec<u32> = dsts.keys().copied().collect();
            let sampled: usize = dsts.values().sum();
            let t = g.relations[rel.index()].relation.dst;
            exchange(
                &mut bus,
                Message {
                    kind: MessageKind::TopologyRequest,
                    layer: hop,
                    position: None,
                    from: w,
                    to: o,
                    ntype: Some(t),
                    bytes: acct.ids(ids.len()),
                    ids,
                    payload: None,
                },
            )?;
            exchange(
                &mut bus,
                Message {
                    kind: MessageKind::TopologyReply,
                    layer: hop,
                    position: None,
                    from: o,
                    to: w,
                    ntype: Some(g.relations[rel.index()].relation.src),
                    ids: Vec::new(),
                    payload: None,
                    bytes: acct.ids(sampled),
                },
            )?;
        }
        for ((t, o), ids) in feats {
            let ids: Vec<u32> = ids.into_iter().collect();
            let dim = g.features.get(t).dim;
            let n = ids.len();
            exchange(
                &mut bus,
                Message {
                    kind: MessageKind::FeatureFetchRequest,
                    layer: 0,
                    position: None,
                    from: w,
                    to: o,
                    ntype: Some(t),
                    bytes: acct.ids(n),
                    ids: ids.clone(),
                    payload: None,
                },
            )?;
            exchange(
                &mut bus,
                Message {
                    kind: MessageKind::FeatureFetchReply,
                    layer: 0,
                    position: None,
                    from: o,
                    to: w,
                    ntype: Some(t),
                    ids,
                    payload: None,
                    bytes: acct.matrix(n, dim),
                },
            )?;
        }

        let (lw_loss, d) = softmax_cross_entropy(&lw, &labels, batch.len())?;
        loss += lw_loss;
        for (j, &i) in rows.iter().enumerate() {
            logits.row_mut(i).assign(&lw.row(j));
        }
        let gw = backward(&c.model, tree, &tape, &d, &inputs)?;
        for (t, rows) in &gw.learnable {
            let mut remote: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
            for &id in rows.keys() {
                let o = own.owner_of(*t, id);
                if o != w {
                    remote.entry(o).or_default().push(id);
                }
            }
            let dim = g.features.get(*t).dim;
            for (o, ids) in remote {
                exchange(
                    &mut bus,
                    Message {
                        kind: MessageKind::LearnableGradPush,
                        layer: 0,
                        position: None,
                        from: w,
                        to: o,
                        ntype: Some(*t),
                        bytes: acct.rows_with_ids(ids.len(), dim),
                        ids,
                        payload: None,
                    },
                )?;
            }
        }
        global.merge(&gw);
    }
    if p > 1 {
        let elems = c.model.num_params();
        for w in 0..p {
            exchange(
                &mut bus,
                Message {
                    kind: MessageKind::ParamAllReduce,
                    layer: 0,
                    position: None,
                    from: w,
                    to: (w + 1) % p,
                    ntype: None,
                    ids: Vec::new(),
                    payload: None,
                    bytes: acct.ring_share(elems, p),
                },
            )?;
        }
    }
    global.check_finite()?;

    cluster.adam.update(&mut cluster.model, &global)?;
    cluster.tables.apply(&global)?;
    let report = ExecutionReport {
        engine: Engine::Vanilla,
        batch_index: cluster.batches_run,
        designated: None,
        batch_size: batch.len(),
        loss,
        logits,
        gradients: global,
        stats: bus.stats,
        trace: bus.trace,
        boundary: cluster.boundary.clone(),
        cross_edges: Some(cluster.cross_edges),
        k_rel: cluster.k_rel,
        meta_plan: false,
        target: cluster.graph.target,
    };
    cluster.stats.merge(&report.stats);
    cluster.batches_run += 1;
    Ok(report)
}
