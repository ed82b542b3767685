use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hetgraph::{FeatureStore, NodeTypeId, StorageKind};

/// Synthetic transfer cost model, in nanoseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub read_ns_per_byte: f64,
    pub write_ns_per_byte: f64,
    /// Paid once per transferred array.
    pub fixed_ns: f64,
    /// Reading a row cached on another worker.
    pub peer_ns_per_byte: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            read_ns_per_byte: 0.08,
            write_ns_per_byte: 0.12,
            fixed_ns: 5_000.0,
            peer_ns_per_byte: 0.02,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.read_ns_per_byte, self.write_ns_per_byte, self.fixed_ns, self.peer_ns_per_byte];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Cache(format!("cost model has a negative or non-finite entry: {self:?}")));
        }
        Ok(())
    }

    /// Time to fetch a read-only record of `feature_bytes`.
    pub fn read_only_miss(&self, feature_bytes: u64) -> f64 {
        self.fixed_ns + self.read_ns_per_byte * feature_bytes as f64
    }

    /// Time to read a learnable record with its two moment arrays.
    pub fn learnable_read(&self, feature_bytes: u64) -> f64 {
        3.0 * self.fixed_ns + self.read_ns_per_byte * 3.0 * feature_bytes as f64
    }

    /// Time to read and write back a learnable record with its two moment arrays.
    pub fn learnable_miss(&self, feature_bytes: u64) -> f64 {
        6.0 * self.fixed_ns + (self.read_ns_per_byte + self.write_ns_per_byte) * 3.0 * feature_bytes as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypePenalty {
    pub ntype: NodeTypeId,
    pub learnable: bool,
    pub feature_bytes: u64,
    /// Cache bytes one node occupies: the feature, plus Adam moments when learnable.
    pub record_bytes: u64,
    /// Time lost when the node misses the cache.
    pub miss_time: f64,
    /// `miss_time / record_bytes`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MissPenaltyProfile {
    pub cost: Option<CostModel>,
    /// Types with features, ascending.
    pub types: Vec<TypePenalty>,
}

impl MissPenaltyProfile {
    pub fn get(&self, t: NodeTypeId) -> Option<&TypePenalty> {
        self.types.iter().find(|p| p.ntype == t)
    }

    pub fn ratio(&self, t: NodeTypeId) -> Option<f64> {
        self.get(t).map(|p| p.ratio)
    }
}

pub fn type_penalty(cost: &CostModel, ntype: NodeTypeId, learnable: bool, feature_bytes: u64) -> Result<TypePenalty> {
    cost.validate()?;
    if feature_bytes == 0 {
        return Err(Error::Cache(format!("node type #{} has a zero-size record", ntype.0)));
    }
    let (record_bytes, miss_time) = if learnable {
        (3 * feature_bytes, cost.learnable_miss(feature_bytes))
    } else {
        (feature_bytes, cost.read_only_miss(feature_bytes))
    };
    let ratio = miss_time / record_bytes as f64;
    if ratio.is_nan() || ratio <= 0.0 {
        return Err(Error::Cache(format!("node type #{} has a non-positive miss penalty", ntype.0)));
    }
    Ok(TypePenalty {
        ntype,
        learnable,
        feature_bytes,
        record_bytes,
        miss_time,
        ratio,
    })
}

/// Miss-penalty ratio of every type that has features.
pub fn profile_miss_penalty(cost: &CostModel, store: &FeatureStore) -> Result<MissPenaltyProfile> {
    let mut types = Vec::new();
    for (i, f) in store.types.iter().enumerate() {
        let learnable = match f.kind {
            StorageKind::Absent => continue,
            StorageKind::Dense => false,
            StorageKind::Learnable => true,
        };
        types.push(type_penalty(cost, NodeTypeId(i as u16), learnable, f.row_bytes())?);
    }
    Ok(MissPenaltyProfile {
        cost: Some(*cost),
        types,
    })
}
