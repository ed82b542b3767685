use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::message::{CommStats, MessageKind, MessageRecord};
use crate::hetgraph::NodeTypeId;
use crate::hgnn::Gradients;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Raf,
    Vanilla,
}

/// Outcome of one executed batch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExecutionReport {
    pub engine: Engine,
    pub batch_index: u64,
    pub designated: Option<usize>,
    pub batch_size: usize,
    pub loss: f64,
    /// Rows in batch order.
    #[serde(skip)]
    pub logits: Array2<f64>,
    /// Globally summed gradients applied by this step.
    #[serde(skip)]
    pub gradients: Gradients,
    pub stats: CommStats,
    #[serde(skip)]
    pub trace: Vec<MessageRecord>,
    pub boundary: Vec<usize>,
    pub cross_edges: Option<usize>,
    pub k_rel: usize,
    pub meta_plan: bool,
    pub target: NodeTypeId,
}

impl ExecutionReport {
    /// Bytes that crossed between distinct workers.
    pub fn cross_bytes(&self) -> u64 {
        self.trace.iter().filter(|m| m.from != m.to).map(|m| m.bytes).sum()
    }

    pub fn bytes_of(&self, kinds: &[MessageKind]) -> u64 {
        self.stats.bytes_of(kinds)
    }
}
