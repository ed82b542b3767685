use std::collections::{BTreeMap, VecDeque};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hetgraph::NodeTypeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    PartialAgg,
    PartialGrad,
    FeatureFetchRequest,
    FeatureFetchReply,
    TopologyRequest,
    TopologyReply,
    /// Node ids of a tree position forwarded to a worker that samples its children.
    FrontierIds,
    ParamAllReduce,
    /// Sparse learnable-row gradients exchanged between holders of the same table.
    LearnableSync,
    /// Learnable-row gradients returned to the node's owner.
    LearnableGradPush,
}

impl MessageKind {
    pub const ALL: [MessageKind; 10] = [
        MessageKind::PartialAgg,
        MessageKind::PartialGrad,
        MessageKind::FeatureFetchRequest,
        MessageKind::FeatureFetchReply,
        MessageKind::TopologyRequest,
        MessageKind::TopologyReply,
        MessageKind::FrontierIds,
        MessageKind::ParamAllReduce,
        MessageKind::LearnableSync,
        MessageKind::LearnableGradPush,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::PartialAgg => "partial_agg",
            MessageKind::PartialGrad => "partial_grad",
            MessageKind::FeatureFetchRequest => "feature_fetch_request",
            MessageKind::FeatureFetchReply => "feature_fetch_reply",
            MessageKind::TopologyRequest => "topology_request",
            MessageKind::TopologyReply => "topology_reply",
            MessageKind::FrontierIds => "frontier_ids",
            MessageKind::ParamAllReduce => "param_all_reduce",
            MessageKind::LearnableSync => "learnable_sync",
            MessageKind::LearnableGradPush => "learnable_grad_push",
        }
    }

    /// Kinds whose ids name graph nodes of the aggregation tree.
    pub fn carries_tree_nodes(self) -> bool {
        matches!(
            self,
            MessageKind::PartialAgg | MessageKind::PartialGrad | MessageKind::FrontierIds
        )
    }
}

/// Byte model for every message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accounting {
    pub header_bytes: u64,
    pub id_bytes: u64,
    /// Payload element width: 2, 4 or 8.
    pub elem_width: u64,
}

impl Default for Accounting {
    fn default() -> Self {
        Accounting {
            header_bytes: 32,
            id_bytes: 8,
            elem_width: 4,
        }
    }
}

impl Accounting {
    pub fn with_width(elem_width: u64) -> Result<Self> {
        if ![2, 4, 8].contains(&elem_width) {
            return Err(Error::InvalidArgument(format!("element width {elem_width} not in {{2, 4, 8}}")));
        }
        Ok(Accounting {
            elem_width,
            ..Default::default()
        })
    }

    /// `header + rows × dim × width`.
    pub fn matrix(&self, rows: usize, dim: usize) -> u64 {
        self.header_bytes + (rows * dim) as u64 * self.elem_width
    }

    /// `header + ids × id_bytes`.
    pub fn ids(&self, n: usize) -> u64 {
        self.header_bytes + n as u64 * self.id_bytes
    }

    /// Ids plus one row each.
    pub fn rows_with_ids(&self, rows: usize, dim: usize) -> u64 {
        self.header_bytes + rows as u64 * (self.id_bytes + dim as u64 * self.elem_width)
    }

    /// Bytes one of `holders` ring participants sends to all-reduce `elems` values.
    pub fn ring_share(&self, elems: usize, holders: usize) -> u64 {
        if holders < 2 {
            return 0;
        }
        let h = holders as u64;
        let units = (2 * (h - 1) * elems as u64).div_ceil(h);
        self.header_bytes + units * self.elem_width
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub kind: MessageKind,
    pub layer: usize,
    /// Tree position the payload belongs to, when relevant.
    pub position: Option<usize>,
    pub from: usize,
    pub to: usize,
    pub ntype: Option<NodeTypeId>,
    pub ids: Vec<u32>,
    pub payload: Option<Array2<f64>>,
    pub bytes: u64,
}

impl Message {
    pub fn rows(&self) -> usize {
        self.payload.as_ref().map_or(self.ids.len(), |p| p.nrows())
    }
}

/// One line of the bus trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub kind: MessageKind,
    pub layer: usize,
    pub from: usize,
    pub to: usize,
    pub ntype: Option<NodeTypeId>,
    pub rows: usize,
    pub bytes: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub messages: u64,
    pub rows: u64,
    pub bytes: u64,
}

impl Tally {
    fn add(&mut self, rows: usize, bytes: u64) {
        self.messages += 1;
        self.rows += rows as u64;
        self.bytes += bytes;
    }

    fn absorb(&mut self, o: &Tally) {
        self.messages += o.messages;
        self.rows += o.rows;
        self.bytes += o.bytes;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionStats {
    pub from: usize,
    pub to: usize,
    pub total: Tally,
    pub by_kind: BTreeMap<String, Tally>,
}

/// Message counts and bytes per direction and per kind; additive across batches.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommStats {
    pub total: Tally,
    pub by_kind: BTreeMap<String, Tally>,
    pub directions: Vec<DirectionStats>,
}

impl CommStats {
    pub fn record(&mut self, kind: MessageKind, from: usize, to: usize, rows: usize, bytes: u64) {
        self.total.add(rows, bytes);
        self.by_kind.entry(kind.name().to_string()).or_default().add(rows, bytes);
        let i = match self.directions.binary_search_by(|d| (d.from, d.to).cmp(&(from, to))) {
            Ok(i) => i,
            Err(i) => {
                self.directions.insert(
                    i,
                    DirectionStats {
                        from,
                        to,
                        ..Default::default()
                    },
                );
                i
            }
        };
        let d = &mut self.directions[i];
        d.total.add(rows, bytes);
        d.by_kind.entry(kind.name().to_string()).or_default().add(rows, bytes);
    }

    pub fn merge(&mut self, other: &CommStats) {
        self.total.absorb(&other.total);
        for (k, t) in &other.by_kind {
            self.by_kind.entry(k.clone()).or_default().absorb(t);
        }
        for d in &other.directions {
            let i = match self.directions.binary_search_by(|x| (x.from, x.to).cmp(&(d.from, d.to))) {
                Ok(i) => i,
                Err(i) => {
                    self.directions.insert(
                        i,
                        DirectionStats {
                            from: d.from,
                            to: d.to,
                            ..Default::default()
                        },
                    );
                    i
                }
            };
            let x = &mut self.directions[i];
            x.total.absorb(&d.total);
            for (k, t) in &d.by_kind {
                x.by_kind.entry(k.clone()).or_default().absorb(t);
            }
        }
    }

    pub fn kind(&self, kind: MessageKind) -> Tally {
        self.by_kind.get(kind.name()).copied().unwrap_or_default()
    }

    pub fn bytes_of(&self, kinds: &[MessageKind]) -> u64 {
        kinds.iter().map(|&k| self.kind(k).bytes).sum()
    }
}

/// In-process reliable bus with one FIFO queue per ordered worker pair.
#[derive(Debug, Default)]
pub struct Bus {
    queues: BTreeMap<(usize, usize), VecDeque<Message>>,
    pub stats: CommStats,
    pub trace: Vec<MessageRecord>,
}

impl Bus {
    pub fn send(&mut self, msg: Message) {
        self.stats.record(msg.kind, msg.from, msg.to, msg.rows(), msg.bytes);
        self.trace.push(MessageRecord {
            kind: msg.kind,
            layer: msg.layer,
            from: msg.from,
            to: msg.to,
            ntype: msg.ntype,
            rows: msg.rows(),
            bytes: msg.bytes,
        });
        self.queues.entry((msg.from, msg.to)).or_default().push_back(msg);
    }

    /// Pops the oldest message from `from` to `to`, checking its kind.
    pub fn recv(&mut self, from: usize, to: usize, kind: MessageKind) -> Result<Message> {
        let msg = self
            .queues
            .get_mut(&(from, to))
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| Error::PlanMismatch(format!("no pending message {from} -> {to}")))?;
        if msg.kind != kind {
            return Err(Error::PlanMismatch(format!(
                "expected {} from {from} to {to}, got {}",
                kind.name(),
                msg.kind.name()
            )));
        }
        Ok(msg)
    }

    pub fn pending(&self) -> usize {
        self.queues.values().map(VecDeque::len).sum()
    }
}
