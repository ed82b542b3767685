use serde::{Deserialize, Serialize};

use super::cost::MissPenaltyProfile;
use super::hotness::HotnessTable;
use crate::error::{Error, Result};
use crate::hetgraph::NodeTypeId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeAllocation {
    pub ntype: NodeTypeId,
    pub count: u64,
    pub ratio: f64,
    pub record_bytes: u64,
    /// Unrounded proportional share in bytes.
    pub exact: f64,
    pub bytes: u64,
    pub capacity: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CacheAllocation {
    pub budget: u64,
    pub types: Vec<TypeAllocation>,
}

impl CacheAllocation {
    pub fn allocated(&self) -> u64 {
        self.types.iter().map(|t| t.bytes).sum()
    }

    pub fn get(&self, t: NodeTypeId) -> Option<&TypeAllocation> {
        self.types.iter().find(|a| a.ntype == t)
    }

    pub fn capacity(&self, t: NodeTypeId) -> usize {
        self.get(t).map_or(0, |a| a.capacity)
    }
}

/// Splits `budget` in proportion to `weight_i`, flooring each share to whole
/// records of `record_i` bytes. Returns `(exact share, allocated bytes)`.
pub fn proportional_allocation(budget: u64, items: &[(f64, u64)]) -> Result<Vec<(f64, u64)>> {
    if items.iter().any(|&(w, r)| !(w.is_finite() && w >= 0.0) || r == 0) {
        return Err(Error::Cache("weights must be finite and non-negative with positive record sizes".into()));
    }
    let total: f64 = items.iter().map(|&(w, _)| w).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Cache("nothing to cache: every count × ratio product is zero".into()));
    }
    let mut out: Vec<(f64, u64)> = items
        .iter()
        .map(|&(w, r)| {
            let exact = budget as f64 * w / total;
            // absorbs rounding noise in shares that are whole records
            let records = (exact / r as f64 * (1.0 + 1e-12)).floor() as u64;
            (exact, records * r)
        })
        .collect();
    while out.iter().map(|x| x.1).sum::<u64>() > budget {
        let (i, _) = out
            .iter()
            .enumerate()
            .max_by(|a, b| (a.1 .1 as f64 - a.1 .0).total_cmp(&(b.1 .1 as f64 - b.1 .0)))
            .expect("non-empty");
        out[i].1 -= items[i].1;
    }
    Ok(out)
}

fn allocate_with(
    budget: u64,
    hotness: &HotnessTable,
    profile: &MissPenaltyProfile,
    cacheable: Option<&[NodeTypeId]>,
    penalty_aware: bool,
) -> Result<CacheAllocation> {
    let types: Vec<_> = profile
        .types
        .iter()
        .filter(|p| cacheable.is_none_or(|c| c.contains(&p.ntype)))
        .collect();
    if types.is_empty() {
        return Err(Error::Cache("no cacheable node types".into()));
    }
    let items: Vec<(f64, u64)> = types
        .iter()
        .map(|p| {
            let c = hotness.total(p.ntype) as f64;
            (if penalty_aware { c * p.ratio } else { c }, p.record_bytes)
        })
        .collect();
    let shares = proportional_allocation(budget, &items)?;
    Ok(CacheAllocation {
        budget,
        types: types
            .iter()
            .zip(shares)
            .map(|(p, (exact, bytes))| TypeAllocation {
                ntype: p.ntype,
                count: hotness.total(p.ntype),
                ratio: p.ratio,
                record_bytes: p.record_bytes,
                exact,
                bytes,
                capacity: (bytes / p.record_bytes) as usize,
            })
            .collect(),
    })
}

/// Budget split by `count_a × o_a` over the cacheable types.
pub fn allocate_cache(
    budget: u64,
    hotness: &HotnessTable,
    profile: &MissPenaltyProfile,
    cacheable: Option<&[NodeTypeId]>,
) -> Result<CacheAllocation> {
    allocate_with(budget, hotness, profile, cacheable, true)
}

/// Budget split by visit count alone.
pub fn allocate_hotness_only(
    budget: u64,
    hotness: &HotnessTable,
    profile: &MissPenaltyProfile,
    cacheable: Option<&[NodeTypeId]>,
) -> Result<CacheAllocation> {
    allocate_with(budget, hotness, profile, cacheable, false)
}
