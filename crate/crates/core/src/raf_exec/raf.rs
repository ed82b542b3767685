use std::collections::{BTreeMap, HashMap};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::message::{Accounting, Bus, CommStats, Message, MessageKind};
use super::report::{Engine, ExecutionReport};
use crate::error::{Error, Result};
use crate::hetgraph::{mix_seed, FanoutSampler, HetGraph, NeighborSampler, NodeTypeId, SampledBlocks};
use crate::hgnn::{
    batch_labels, combine_order, expand, mean_rows, mean_rows_backward, output_dim, relu, relu_backward,
    softmax_cross_entropy, AdamConfig, AdamState, FeatureSource, Gradients, GraphInputs, HgnnModel, LearnableTables,
    LinkSample, ParamKey,
};
use crate::metapartition::{
    boundary_nodes, cross_partition_edges, materialize_partitions, HetPartition, PartitionPlan, PlanKind,
};

/// How the worker that combines root partials is chosen per batch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DesignatedPolicy {
    #[default]
    RoundRobin,
    Seeded { seed: u64 },
}

impl DesignatedPolicy {
    pub fn pick(&self, batch_index: u64, workers: usize) -> usize {
        let w = workers.max(1) as u64;
        match *self {
            DesignatedPolicy::RoundRobin => (batch_index % w) as usize,
            DesignatedPolicy::Seeded { seed } => (mix_seed(&[seed, 0xDE51, batch_index]) % w) as usize,
        }
    }
}

/// Where neighbour samples come from.
#[derive(Clone, Copy, Debug)]
pub enum Sampling<'a> {
    /// Each worker samples its own relations with the counter-based sampler.
    Fresh { seed: u64 },
    /// Every worker reads the same pre-sampled blocks.
    Shared(&'a SampledBlocks),
}

#[derive(Clone, Debug)]
pub struct RafWorker {
    pub id: usize,
    pub part: HetPartition,
    /// Weights of the links this worker owns.
    pub model: HgnnModel,
    pub adam: AdamState,
    /// Learnable inputs consumed by this worker's deepest links.
    pub tables: LearnableTables,
}

#[derive(Clone, Debug)]
pub struct RafCluster {
    pub plan: PartitionPlan,
    pub workers: Vec<RafWorker>,
    pub fanouts: Vec<usize>,
    pub acct: Accounting,
    pub designated: DesignatedPolicy,
    /// `|B(G_i)|` per worker.
    pub boundary: Vec<usize>,
    pub boundary_types: Vec<NodeTypeId>,
    /// Edges whose aggregation crosses workers; recorded for 2-way runs.
    pub cross_edges: Option<usize>,
    pub k_rel: usize,
    pub batches_run: u64,
    pub stats: CommStats,
    group: Vec<usize>,
    members: Vec<Vec<usize>>,
    key_holders: BTreeMap<ParamKey, Vec<usize>>,
    table_holders: BTreeMap<NodeTypeId, Vec<usize>>,
}

#[derive(Clone, Debug)]
struct Local {
    nodes: Vec<Option<Vec<u32>>>,
    link: Vec<Option<LinkSample>>,
    h: Vec<Option<Array2<f64>>>,
    z: Vec<Option<Array2<f64>>>,
    means: Vec<Option<Array2<f64>>>,
    active: Vec<Option<Vec<usize>>>,
    dh: Vec<Option<Array2<f64>>>,
}

impl Local {
    fn new(n: usize) -> Self {
        Local {
            nodes: vec![None; n],
            link: vec![None; n],
            h: vec![None; n],
            z: vec![None; n],
            means: vec![None; n],
            active: vec![None; n],
            dh: vec![None; n],
        }
    }
}

fn index_of(ids: &[u32]) -> HashMap<u32, usize> {
    ids.iter().enumerate().map(|(i, &v)| (v, i)).collect()
}

fn scatter_add(z: &mut Array2<f64>, index: &HashMap<u32, usize>, ids: &[u32], rows: &Array2<f64>) -> Result<()> {
    for (i, id) in ids.iter().enumerate() {
        let r = *index
            .get(id)
            .ok_or_else(|| Error::PlanMismatch(format!("partial row for node {id} not in the combine list")))?;
        let mut dst = z.row_mut(r);
        dst += &rows.row(i);
    }
    Ok(())
}

fn gather(src: &Array2<f64>, index: &HashMap<u32, usize>, ids: &[u32]) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((ids.len(), src.ncols()));
    for (i, id) in ids.iter().enumerate() {
        let r = *index
            .get(id)
            .ok_or_else(|| Error::PlanMismatch(format!("gradient row for node {id} not in the combine list")))?;
        out.row_mut(i).assign(&src.row(r));
    }
    Ok(out)
}

impl RafCluster {
    /// Materialises the plan's partitions from `g` and builds one worker per partition.
    pub fn new(
        g: &HetGraph,
        plan: &PartitionPlan,
        model: &HgnnModel,
        tables: &LearnableTables,
        adam: AdamConfig,
        fanouts: &[usize],
        acct: Accounting,
    ) -> Result<Self> {
        let parts = materialize_partitions(g, plan)?;
        let cross = (plan.num_partitions() == 2).then(|| cross_partition_edges(g, plan));
        Self::from_partitions(plan, parts, model, tables, adam, fanouts, acct, cross)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_partitions(
        plan: &PartitionPlan,
        parts: Vec<HetPartition>,
        model: &HgnnModel,
        tables: &LearnableTables,
        adam: AdamConfig,
        fanouts: &[usize],
        acct: Accounting,
        cross_edges: Option<usize>,
    ) -> Result<Self> {
        let tree = &plan.tree;
        if !plan.deduplicated {
            return Err(Error::PlanMismatch("workers need a deduplicated plan".into()));
        }
        if parts.len() != plan.num_partitions() {
            return Err(Error::PlanMismatch(format!(
                "{} partitions for a {}-way plan",
                parts.len(),
                plan.num_partitions()
            )));
        }
        if model.k != tree.k {
            return Err(Error::PlanMismatch(format!("model has {} layers, tree depth {}", model.k, tree.k)));
        }
        if fanouts.len() != tree.k {
            return Err(Error::InvalidArgument(format!("{} fanouts for {} layers", fanouts.len(), tree.k)));
        }
        let group: Vec<usize> = (0..parts.len()).map(|i| plan.group_of(i)).collect();
        let members: Vec<Vec<usize>> = (0..plan.num_groups()).map(|gi| plan.group_members(gi)).collect();
        for q in 1..tree.len() {
            let gq = plan.link_group[q]
                .ok_or_else(|| Error::PlanMismatch(format!("tree position {q} has no owning partition")))?;
            if gq >= members.len() || members[gq].is_empty() {
                return Err(Error::PlanMismatch(format!("position {q} owned by empty group {gq}")));
            }
            let parent = tree.nodes[q].parent.expect("non-root has a parent");
            if parent != 0 {
                let gp = plan.link_group[parent].expect("checked above");
                if gp != gq && (members[gp].len() > 1 || members[gq].len() > 1) {
                    return Err(Error::PlanMismatch(format!(
                        "position {q} crosses replicated groups {gp} and {gq}"
                    )));
                }
            }
        }

        let mut workers = Vec::with_capacity(parts.len());
        let mut key_holders: BTreeMap<ParamKey, Vec<usize>> = BTreeMap::new();
        let mut table_holders: BTreeMap<NodeTypeId, Vec<usize>> = BTreeMap::new();
        let mut boundary = Vec::with_capacity(parts.len());
        let mut boundary_types = std::collections::BTreeSet::new();
        for (i, part) in parts.into_iter().enumerate() {
            if part.id != i {
                return Err(Error::PlanMismatch(format!("partition {} in slot {i}", part.id)));
            }
            let mut keys = Vec::new();
            for q in plan.owned_links(group[i]) {
                let r = tree.nodes[q].via.expect("link relation");
                if part.local_relation(r).is_none() {
                    return Err(Error::PlanMismatch(format!(
                        "partition {i} owns position {q} but lacks relation #{}",
                        r.0
                    )));
                }
                let key = ParamKey {
                    relation: r,
                    layer: tree.link_layer(q),
                };
                if !model.weights.contains_key(&key) {
                    return Err(Error::PlanMismatch(format!("model lacks relation #{} layer {}", r.0, key.layer)));
                }
                if !keys.contains(&key) {
                    keys.push(key);
                }
            }
            keys.sort();
            for k in &keys {
                key_holders.entry(*k).or_default().push(i);
            }
            let learnable: Vec<NodeTypeId> = plan
                .leaf_types(i)
                .into_iter()
                .filter(|&t| tables.get(t).is_some())
                .collect();
            let own_tables = LearnableTables {
                tables: learnable
                    .iter()
                    .map(|t| (*t, tables.get(*t).expect("filtered").clone()))
                    .collect(),
            };
            for t in &learnable {
                table_holders.entry(*t).or_default().push(i);
            }
            let b = boundary_nodes(&part, plan);
            boundary.push(b.len());
            boundary_types.extend(b.iter().map(|(t, _)| *t));
            workers.push(RafWorker {
                id: i,
                part,
                model: model.shard(&keys),
                adam: AdamState::new(adam),
                tables: own_tables,
            });
        }
        Ok(RafCluster {
            plan: plan.clone(),
            workers,
            fanouts: fanouts.to_vec(),
            acct,
            designated: DesignatedPolicy::RoundRobin,
            boundary,
            boundary_types: boundary_types.into_iter().collect(),
            cross_edges,
            k_rel: tree.unique_relations().len(),
            batches_run: 0,
            stats: CommStats::default(),
            group,
            members,
            key_holders,
            table_holders,
        })
    }

    pub fn num_workers(&self) -> usize {
        self.workers.len()
    }

    /// Runs one batch with the designated worker chosen by the cluster's policy.
    pub fn run_batch(&mut self, batch: &[u32], sampling: Sampling<'_>) -> Result<ExecutionReport> {
        let d = self.designated.pick(self.batches_run, self.workers.len());
        run_raf_batch(self, batch, d, sampling)
    }

    /// The full model reassembled from the worker shards.
    pub fn gather_model(&self) -> HgnnModel {
        let mut m = self.workers[0].model.clone();
        for w in &self.workers[1..] {
            for (k, v) in &w.model.weights {
                m.weights.entry(*k).or_insert_with(|| v.clone());
            }
        }
        m
    }

    fn home(&self, q: usize, w: usize, designated: usize) -> usize {
        if q == 0 {
            return designated;
        }
        let g = self.plan.link_group[q].expect("validated");
        if self.group[w] == g {
            w
        } else {
            self.members[g][0]
        }
    }

    fn contributes(&self, q: usize, w: usize) -> bool {
        self.plan.tree.nodes[q]
            .children
            .iter()
            .any(|&c| self.plan.link_group[c] == Some(self.group[w]))
    }
}

/// One training step of relation-aggregation-first execution.
///
/// Every worker samples and aggregates its own links; partial sums cross the
/// bus only at positions combined elsewhere, the designated worker combines
/// the root and computes the loss, and each worker updates its shard.
pub fn run_raf_batch(
    cluster: &mut RafCluster,
    batch: &[u32],
    designated: usize,
    sampling: Sampling<'_>,
) -> Result<ExecutionReport> {
    let p = cluster.workers.len();
    if designated >= p {
        return Err(Error::InvalidArgument(format!("designated worker {designated} of {p}")));
    }
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let batch_index = index_of(batch);
    if batch_index.len() != batch.len() {
        return Err(Error::InvalidArgument("batch contains duplicate nodes".into()));
    }
    let c = &*cluster;
    let tree = &c.plan.tree;
    let k = tree.k;
    let n = tree.len();
    let acct = c.acct;
    let proto = &c.workers[0].model;
    let fresh: Vec<FanoutSampler<'_, HetPartition>> = match sampling {
        Sampling::Fresh { seed } => c
            .workers
            .iter()
            .map(|w| FanoutSampler::new(&w.part, &c.fanouts, seed))
            .collect(),
        Sampling::Shared(_) => Vec::new(),
    };
    let sampler_of = |w: usize| -> &dyn NeighborSampler {
        match sampling {
            Sampling::Shared(b) => b,
            Sampling::Fresh { .. } => &fresh[w],
        }
    };
    let mut bus = Bus::default();
    let mut st: Vec<Local> = (0..p).map(|_| Local::new(n)).collect();
    for (w, s) in st.iter_mut().enumerate() {
        let r = c.plan.partitions[w].replica.slice(batch.len());
        s.nodes[0] = Some(batch[r].to_vec());
    }

    // top-down sampling of every owned link
    for q in 1..n {
        let node = &tree.nodes[q];
        let parent = node.parent.expect("non-root has a parent");
        let rel = node.via.expect("non-root has a relation");
        let g = c.plan.link_group[q].expect("validated");
        for &w in &c.members[g] {
            if st[w].nodes[parent].is_none() {
                let src = c.home(parent, w, designated);
                let ids = st[src].nodes[parent]
                    .clone()
                    .ok_or_else(|| Error::PlanMismatch(format!("position {parent} unsampled on worker {src}")))?;
                bus.send(Message {
                    kind: MessageKind::FrontierIds,
                    layer: k - tree.nodes[parent].depth,
                    position: Some(parent),
                    from: src,
                    to: w,
                    ntype: Some(tree.nodes[parent].ntype),
                    bytes: acct.ids(ids.len()),
                    ids,
                    payload: None,
                });
                let msg = bus.recv(src, w, MessageKind::FrontierIds)?;
                st[w].nodes[parent] = Some(msg.ids);
            }
            let link = expand(sampler_of(w), node.depth, rel, st[w].nodes[parent].as_ref().expect("set above"))?;
            st[w].nodes[q] = Some(link.src_nodes.clone());
            st[w].link[q] = Some(link);
        }
    }

    // bottom-up aggregation
    let mut logits = None;
    for q in (0..n).rev() {
        let node = &tree.nodes[q];
        if node.depth == k {
            let g = c.plan.link_group[q].expect("validated");
            for &w in &c.members[g] {
                let wk = &c.workers[w];
                let inputs = GraphInputs {
                    graph: &wk.part.graph,
                    tables: &wk.tables,
                };
                let h = inputs.input_rows(node.ntype, st[w].nodes[q].as_ref().expect("sampled"))?;
                st[w].h[q] = Some(h);
            }
            continue;
        }
        let layer = k - node.depth;
        let out = output_dim(proto, layer);
        let order = combine_order(tree, q);
        let mut own: BTreeMap<usize, (Vec<u32>, Array2<f64>)> = BTreeMap::new();
        let mut contributors: Vec<(usize, usize)> = Vec::new();
        for w in 0..p {
            if !c.contributes(q, w) {
                continue;
            }
            let nodes_q = st[w].nodes[q].clone().expect("contributor sampled the position");
            let mut partial = Array2::zeros((nodes_q.len(), out));
            let mut active = vec![false; nodes_q.len()];
            for &ch in order.iter().filter(|&&ch| c.plan.link_group[ch] == Some(c.group[w])) {
                let key = ParamKey {
                    relation: tree.nodes[ch].via.expect("child relation"),
                    layer,
                };
                let wt = c.workers[w].model.weight(key)?;
                let link = st[w].link[ch].as_ref().expect("owned link sampled");
                let h = st[w].h[ch].as_ref().expect("child computed first");
                if h.ncols() != wt.nrows() {
                    return Err(Error::DimMismatch(format!(
                        "relation #{} layer {layer}: input width {} vs weight rows {}",
                        key.relation.0,
                        h.ncols(),
                        wt.nrows()
                    )));
                }
                let m = mean_rows(link, h.view());
                partial += &m.dot(wt);
                for i in link.active() {
                    active[i] = true;
                }
                st[w].means[ch] = Some(m);
            }
            let home = c.home(q, w, designated);
            contributors.push((w, home));
            if home == w {
                own.insert(w, (nodes_q, partial));
            } else {
                let act: Vec<usize> = (0..nodes_q.len()).filter(|&i| active[i]).collect();
                let ids: Vec<u32> = act.iter().map(|&i| nodes_q[i]).collect();
                let payload = partial.select(Axis(0), &act);
                bus.send(Message {
                    kind: MessageKind::PartialAgg,
                    layer,
                    position: Some(q),
                    from: w,
                    to: home,
                    ntype: Some(node.ntype),
                    bytes: acct.matrix(act.len(), out),
                    ids,
                    payload: Some(payload),
                });
                st[w].active[q] = Some(act);
            }
        }
        let homes: Vec<usize> = if q == 0 {
            vec![designated]
        } else {
            c.members[c.plan.link_group[q].expect("validated")].clone()
        };
        for hm in homes {
            let list: Vec<u32> = if q == 0 {
                batch.to_vec()
            } else {
                st[hm].nodes[q].clone().expect("home sampled the position")
            };
            let index = index_of(&list);
            let mut z = Array2::zeros((list.len(), out));
            for &(s, _) in contributors.iter().filter(|(_, h)| *h == hm) {
                if s == hm {
                    let (ids, rows) = own.remove(&s).expect("own partial");
                    if ids == list {
                        z += &rows;
                    } else {
                        scatter_add(&mut z, &index, &ids, &rows)?;
                    }
                } else {
                    let msg = bus.recv(s, hm, MessageKind::PartialAgg)?;
                    if msg.position != Some(q) {
                        return Err(Error::PlanMismatch(format!("partial for position {:?} at {q}", msg.position)));
                    }
                    scatter_add(&mut z, &index, &msg.ids, msg.payload.as_ref().expect("partial payload"))?;
                }
            }
            if q == 0 {
                logits = Some(z);
            } else {
                st[hm].h[q] = Some(relu(&z));
                st[hm].z[q] = Some(z);
            }
        }
    }
    let logits = logits.expect("root combined");

    let labels = batch_labels(&c.workers[designated].part.graph, batch)?;
    let (loss, d_logits) = softmax_cross_entropy(&logits, &labels, batch.len())?;

    // top-down gradient flow
    let mut grads: Vec<Gradients> = vec![Gradients::default(); p];
    for q in 0..n {
        let node = &tree.nodes[q];
        if node.depth == k {
            if let Some(g) = c.plan.link_group[q] {
                for &w in &c.members[g] {
                    if c.workers[w].tables.get(node.ntype).is_none() {
                        continue;
                    }
                    let Some(dh) = st[w].dh[q].take() else { continue };
                    let ids = st[w].nodes[q].as_ref().expect("sampled");
                    for (i, &id) in ids.iter().enumerate() {
                        grads[w].add_row(node.ntype, id, dh.row(i));
                    }
                }
            }
            continue;
        }
        let layer = k - node.depth;
        let out = output_dim(proto, layer);
        let homes: Vec<usize> = if q == 0 {
            vec![designated]
        } else {
            c.members[c.plan.link_group[q].expect("validated")].clone()
        };
        for hm in homes {
            let (list, dz_home) = if q == 0 {
                (batch.to_vec(), d_logits.clone())
            } else {
                let list = st[hm].nodes[q].clone().expect("home sampled the position");
                let dh = st[hm].dh[q].take();
                let z = st[hm].z[q].as_ref().expect("combined");
                let dz = match dh {
                    Some(dh) => relu_backward(z, &dh),
                    None => Array2::zeros(z.dim()),
                };
                (list, dz)
            };
            let index = index_of(&list);
            for w in 0..p {
                if !c.contributes(q, w) || c.home(q, w, designated) != hm {
                    continue;
                }
                let nodes_q = st[w].nodes[q].clone().expect("contributor sampled the position");
                let dz_w = if w == hm {
                    if nodes_q == list {
                        dz_home.clone()
                    } else {
                        gather(&dz_home, &index, &nodes_q)?
                    }
                } else {
                    let act = st[w].active[q].take().expect("partial was sent");
                    let ids: Vec<u32> = act.iter().map(|&i| nodes_q[i]).collect();
                    let payload = gather(&dz_home, &index, &ids)?;
                    bus.send(Message {
                        kind: MessageKind::PartialGrad,
                        layer,
                        position: Some(q),
                        from: hm,
                        to: w,
                        ntype: Some(node.ntype),
                        bytes: acct.matrix(ids.len(), out),
                        ids,
                        payload: Some(payload),
                    });
                    let msg = bus.recv(hm, w, MessageKind::PartialGrad)?;
                    let rows = msg.payload.expect("gradient payload");
                    let mut dz = Array2::zeros((nodes_q.len(), out));
                    for (j, &i) in act.iter().enumerate() {
                        dz.row_mut(i).assign(&rows.row(j));
                    }
                    dz
                };
                for &ch in tree.nodes[q].children.iter() {
                    if c.plan.link_group[ch] != Some(c.group[w]) {
                        continue;
                    }
                    let key = ParamKey {
                        relation: tree.nodes[ch].via.expect("child relation"),
                        layer,
                    };
                    let m = st[w].means[ch].take().expect("forward mean");
                    grads[w].add_weight(key, &m.t().dot(&dz_w));
                    let dm = dz_w.dot(&c.workers[w].model.weight(key)?.t());
                    let link = st[w].link[ch].as_ref().expect("owned link sampled");
                    let num_src = st[w].nodes[ch].as_ref().expect("sampled").len();
                    st[w].dh[ch] = Some(mean_rows_backward(link, dm.view(), num_src));
                }
            }
        }
    }

    // holders of the same weights or learnable table agree on summed gradients
    for (key, holders) in &c.key_holders {
        if holders.len() < 2 {
            continue;
        }
        let mut sum: Option<Array2<f64>> = None;
        for &w in holders {
            if let Some(gw) = grads[w].weights.get(key) {
                match &mut sum {
                    Some(s) => *s += gw,
                    None => sum = Some(gw.clone()),
                }
            }
        }
        let elems = c.workers[holders[0]].model.weight(*key)?.len();
        for (i, &w) in holders.iter().enumerate() {
            let to = holders[(i + 1) % holders.len()];
            bus.send(Message {
                kind: MessageKind::ParamAllReduce,
                layer: key.layer,
                position: None,
                from: w,
                to,
                ntype: None,
                ids: Vec::new(),
                payload: None,
                bytes: acct.ring_share(elems, holders.len()),
            });
            bus.recv(w, to, MessageKind::ParamAllReduce)?;
        }
        for &w in holders {
            match &sum {
                Some(s) => {
                    grads[w].weights.insert(*key, s.clone());
                }
                None => {
                    grads[w].weights.remove(key);
                }
            }
        }
    }
    for (t, holders) in &c.table_holders {
        if holders.len() < 2 {
            continue;
        }
        let dim = c.workers[holders[0]].tables.get(*t).expect("holder").dim();
        let mut sum: BTreeMap<u32, ndarray::Array1<f64>> = BTreeMap::new();
        for &w in holders {
            let rows = grads[w].learnable.get(t).cloned().unwrap_or_default();
            for &to in holders.iter().filter(|&&o| o != w) {
                let ids: Vec<u32> = rows.keys().copied().collect();
                bus.send(Message {
                    kind: MessageKind::LearnableSync,
                    layer: 0,
                    position: None,
                    from: w,
                    to,
                    ntype: Some(*t),
                    bytes: acct.rows_with_ids(ids.len(), dim),
                    ids,
                    payload: None,
                });
                bus.recv(w, to, MessageKind::LearnableSync)?;
            }
            for (id, r) in rows {
                match sum.get_mut(&id) {
                    Some(s) => *s += &r,
                    None => {
                        sum.insert(id, r);
                    }
                }
            }
        }
        for &w in holders {
            if sum.is_empty() {
                grads[w].learnable.remove(t);
            } else {
                grads[w].learnable.insert(*t, sum.clone());
            }
        }
    }

    let mut global = Gradients::default();
    for (key, holders) in &c.key_holders {
        if let Some(gw) = grads[holders[0]].weights.get(key) {
            global.weights.insert(*key, gw.clone());
        }
    }
    for (t, holders) in &c.table_holders {
        if let Some(rows) = grads[holders[0]].learnable.get(t) {
            global.learnable.insert(*t, rows.clone());
        }
    }
    global.check_finite()?;
    if bus.pending() != 0 {
        return Err(Error::PlanMismatch(format!("{} undelivered messages", bus.pending())));
    }

    for (w, wk) in cluster.workers.iter_mut().enumerate() {
        wk.adam.update(&mut wk.model, &grads[w])?;
        wk.tables.apply(&grads[w])?;
    }
    let report = ExecutionReport {
        engine: Engine::Raf,
        batch_index: cluster.batches_run,
        designated: Some(designated),
        batch_size: batch.len(),
        loss,
        logits,
        gradients: global,
        stats: bus.stats,
        trace: bus.trace,
        boundary: cluster.boundary.clone(),
        cross_edges: cluster.cross_edges,
        k_rel: cluster.k_rel,
        meta_plan: cluster.plan.kind == PlanKind::Meta,
        target: cluster.plan.target,
    };
    cluster.stats.merge(&report.stats);
    cluster.batches_run += 1;
    Ok(report)
}
