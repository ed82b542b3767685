use serde::{Deserialize, Serialize};

use super::{batch_labels, forward_vanilla, loss_and_grad, softmax_cross_entropy, GraphInputs, HgnnModel, LearnableTables};
use crate::error::Result;
use crate::hetgraph::{HetGraph, NeighborSampler};
use crate::metapartition::Metatree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub failures: usize,
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|)` among entries above the absolute floor.
    pub max_rel_err: f64,
    pub max_abs_diff: f64,
    pub worst: String,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Compares analytic gradients with central differences for every weight
/// entry and every touched learnable entry.
#[allow(clippy::too_many_arguments)]
pub fn gradient_check(
    g: &HetGraph,
    tree: &Metatree,
    model: &HgnnModel,
    tables: &LearnableTables,
    sampler: &dyn NeighborSampler,
    batch: &[u32],
    step: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<GradCheckReport> {
    let labels = batch_labels(g, batch)?;
    let loss_of = |m: &HgnnModel, t: &LearnableTables| -> Result<f64> {
        let inputs = GraphInputs { graph: g, tables: t };
        let (logits, _) = forward_vanilla(m, tree, sampler, &inputs, batch)?;
        Ok(softmax_cross_entropy(&logits, &labels, labels.len())?.0)
    };
    let inputs = GraphInputs { graph: g, tables };
    let (logits, tape) = forward_vanilla(model, tree, sampler, &inputs, batch)?;
    let (_, grads) = loss_and_grad(model, tree, &tape, &logits, &labels, &inputs)?;

    let mut report = GradCheckReport {
        checked: 0,
        failures: 0,
        max_rel_err: 0.0,
        max_abs_diff: 0.0,
        worst: String::new(),
    };
    let mut judge = |analytic: f64, numeric: f64, what: String| {
        report.checked += 1;
        let diff = (analytic - numeric).abs();
        report.max_abs_diff = report.max_abs_diff.max(diff);
        if diff <= abs_floor {
            return;
        }
        let rel = diff / analytic.abs().max(numeric.abs());
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst = what;
        }
        if rel > rel_tol {
            report.failures += 1;
        }
    };

    for (key, w) in &model.weights {
        let analytic = grads.weights.get(key);
        for idx in 0..w.len() {
            let (r, c) = (idx / w.ncols(), idx % w.ncols());
            let mut plus = model.clone();
            plus.weights.get_mut(key).expect("key")[[r, c]] += step;
            let mut minus = model.clone();
            minus.weights.get_mut(key).expect("key")[[r, c]] -= step;
            let numeric = (loss_of(&plus, tables)? - loss_of(&minus, tables)?) / (2.0 * step);
            let a = analytic.map_or(0.0, |g| g[[r, c]]);
            judge(a, numeric, format!("W[rel {} layer {}][{r},{c}]", key.relation.0, key.layer));
        }
    }
    for (t, rows) in &grads.learnable {
        for (&id, row) in rows {
            for c in 0..row.len() {
                let mut plus = tables.clone();
                plus.tables.get_mut(t).expect("table").weights[[id as usize, c]] += step;
                let mut minus = tables.clone();
                minus.tables.get_mut(t).expect("table").weights[[id as usize, c]] -= step;
                let numeric = (loss_of(model, &plus)? - loss_of(model, &minus)?) / (2.0 * step);
                judge(row[c], numeric, format!("learnable type {} row {id}[{c}]", t.0));
            }
        }
    }
    Ok(report)
}
