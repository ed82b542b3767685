use std::fs;
use std::path::Path;

use super::{HetPartition, PartitionPlan};
use crate::error::{Error, Result};
use crate::hetgraph::{load_graph, save_graph};

pub const PLAN_MANIFEST: &str = "plan.json";
pub const PARTITION_GRAPH: &str = "graph.hetg";

pub fn partition_dir(root: &Path, id: usize) -> std::path::PathBuf {
    root.join(format!("part-{id:03}"))
}

/// Writes `plan.json` plus one `part-NNN/graph.hetg` per partition.
pub fn save_plan(dir: &Path, plan: &PartitionPlan, parts: &[HetPartition]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(PLAN_MANIFEST), serde_json::to_vec_pretty(plan)?)?;
    for part in parts {
        let pd = partition_dir(dir, part.id);
        fs::create_dir_all(&pd)?;
        save_graph(&pd.join(PARTITION_GRAPH), &part.graph, Some(&part.relation_ids))?;
    }
    Ok(())
}

pub fn load_plan(dir: &Path) -> Result<(PartitionPlan, Vec<HetPartition>)> {
    let plan: PartitionPlan = serde_json::from_slice(&fs::read(dir.join(PLAN_MANIFEST))?)?;
    let mut parts = Vec::with_capacity(plan.partitions.len());
    for spec in &plan.partitions {
        let (graph, ids) = load_graph(&partition_dir(dir, spec.id).join(PARTITION_GRAPH))?;
        let relation_ids = ids.ok_or_else(|| Error::Format("partition container lacks relation ids".into()))?;
        if relation_ids != spec.relations {
            return Err(Error::PlanMismatch(format!(
                "partition {} relations differ from the manifest",
                spec.id
            )));
        }
        parts.push(HetPartition {
            id: spec.id,
            graph,
            relation_ids,
            node_types: spec.node_types.clone(),
            replica: spec.replica,
        });
    }
    Ok((plan, parts))
}
