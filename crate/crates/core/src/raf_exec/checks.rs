use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::message::{Accounting, MessageKind};
use super::raf::{run_raf_batch, RafCluster, Sampling};
use super::report::ExecutionReport;
use super::vanilla::{run_vanilla_batch, VanillaCluster};
use crate::error::Result;
use crate::hetgraph::{sample_khop, HetGraph, SampleOptions};
use crate::hgnn::{
    batch_labels, forward_vanilla, loss_and_grad, AdamConfig, GraphInputs, HgnnModel, LearnableTables,
};
use crate::metapartition::{random_node_partition, PartitionPlan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// Largest logit difference between the two engines.
    pub logit_diff: f64,
    pub grad_diff: f64,
    pub loss_diff: f64,
    /// Largest logit difference of either engine against a single-process forward pass.
    pub reference_diff: f64,
}

impl EquivalenceReport {
    pub fn max_diff(&self) -> f64 {
        self.logit_diff.max(self.grad_diff).max(self.loss_diff).max(self.reference_diff)
    }
}

fn max_abs(a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>) -> f64 {
    if a.dim() != b.dim() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Runs both engines on one batch with blocks sampled once and shared, and
/// compares logits, loss and gradients.
#[allow(clippy::too_many_arguments)]
pub fn check_equivalence(
    g: &HetGraph,
    plan: &PartitionPlan,
    model: &HgnnModel,
    tables: &LearnableTables,
    batch: &[u32],
    fanouts: &[usize],
    seed: u64,
) -> Result<EquivalenceReport> {
    let blocks = sample_khop(g, batch, fanouts, seed, SampleOptions::default())?;
    let acct = Accounting::default();
    let mut raf = RafCluster::new(g, plan, model, tables, AdamConfig::default(), fanouts, acct)?;
    let r = run_raf_batch(&mut raf, batch, 0, Sampling::Shared(&blocks))?;
    let own = random_node_partition(g, plan.num_partitions().max(1), seed)?;
    let mut van = VanillaCluster::new(g, &plan.tree, own, model, tables, AdamConfig::default(), fanouts, acct)?;
    let v = run_vanilla_batch(&mut van, batch, Sampling::Shared(&blocks))?;

    let inputs = GraphInputs { graph: g, tables };
    let (logits, tape) = forward_vanilla(model, &plan.tree, &blocks, &inputs, batch)?;
    let labels = batch_labels(g, batch)?;
    let (loss, grads) = loss_and_grad(model, &plan.tree, &tape, &logits, &labels, &inputs)?;
    Ok(EquivalenceReport {
        logit_diff: max_abs(&r.logits, &v.logits),
        grad_diff: r.gradients.max_abs_diff(&v.gradients),
        loss_diff: (r.loss - v.loss).abs(),
        reference_diff: max_abs(&r.logits, &logits)
            .max(max_abs(&v.logits, &logits))
            .max(r.gradients.max_abs_diff(&grads))
            .max((r.loss - loss).abs()),
    })
}

/// Outcome of the communication bound checks on one report.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommVerdict {
    /// Partial rows per direction and layer stay within `k_rel × |B(sender)|`.
    pub message_bound: bool,
    /// `max |B(G_i)| ≤ E(G_1, G_2)`; `None` unless the run is 2-way.
    pub boundary_bound: Option<bool>,
    /// Every cross-worker node id is of the target type; `None` unless the plan is a meta plan.
    pub confinement: Option<bool>,
    pub violations: Vec<String>,
}

impl CommVerdict {
    pub fn passed(&self) -> bool {
        self.message_bound && self.boundary_bound != Some(false) && self.confinement != Some(false)
    }
}

pub fn check_comm_bounds(report: &ExecutionReport) -> CommVerdict {
    let mut v = CommVerdict {
        message_bound: true,
        ..Default::default()
    };
    let mut rows: BTreeMap<(MessageKind, usize, usize, usize), usize> = BTreeMap::new();
    for m in &report.trace {
        if matches!(m.kind, MessageKind::PartialAgg | MessageKind::PartialGrad) && m.from != m.to {
            *rows.entry((m.kind, m.from, m.to, m.layer)).or_default() += m.rows;
        }
    }
    for ((kind, from, to, layer), n) in rows {
        // a gradient answers the partial sent the other way
        let sender = if kind == MessageKind::PartialAgg { from } else { to };
        let bound = report.k_rel * report.boundary.get(sender).copied().unwrap_or(0);
        if n > bound {
            v.message_bound = false;
            v.violations.push(format!(
                "{} {from}->{to} layer {layer}: {n} rows > {} x {}",
                kind.name(),
                report.k_rel,
                report.boundary.get(sender).copied().unwrap_or(0)
            ));
        }
    }
    if report.boundary.len() == 2 {
        if let Some(e) = report.cross_edges {
            let b = report.boundary[0].max(report.boundary[1]);
            let ok = b <= e;
            if !ok {
                v.violations.push(format!("max boundary {b} exceeds cross edges {e}"));
            }
            v.boundary_bound = Some(ok);
        }
    }
    if report.meta_plan {
        let stray: Vec<_> = report
            .trace
            .iter()
            .filter(|m| m.kind.carries_tree_nodes() && m.from != m.to && m.ntype != Some(report.target))
            .collect();
        for m in &stray {
            v.violations.push(format!(
                "{} {}->{} carries ids of type {:?}",
                m.kind.name(),
                m.from,
                m.to,
                m.ntype.map(|t| t.0)
            ));
        }
        v.confinement = Some(stray.is_empty());
    }
    v
}
