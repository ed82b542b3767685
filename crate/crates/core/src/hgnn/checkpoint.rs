use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{HgnnModel, ParamKey};
use crate::error::{Error, Result};
use crate::hetgraph::RelationId;

pub const CHECKPOINT_MANIFEST: &str = "model.json";
pub const CHECKPOINT_TENSORS: &str = "model.bin";

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    relation: u16,
    layer: usize,
    rows: usize,
    cols: usize,
    /// Offset into the tensor file, in f64 elements.
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    k: usize,
    hidden: usize,
    num_classes: usize,
    input_dims: Vec<usize>,
    tensors: Vec<TensorEntry>,
}

/// Writes a JSON manifest and a flat little-endian f64 tensor file.
pub fn save_checkpoint(dir: &Path, model: &HgnnModel) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut bin = Vec::new();
    let mut tensors = Vec::new();
    let mut offset = 0;
    for (key, w) in &model.weights {
        tensors.push(TensorEntry {
            relation: key.relation.0,
            layer: key.layer,
            rows: w.nrows(),
            cols: w.ncols(),
            offset,
        });
        for &x in w.iter() {
            bin.extend_from_slice(&x.to_le_bytes());
        }
        offset += w.len();
    }
    let manifest = Manifest {
        k: model.k,
        hidden: model.hidden,
        num_classes: model.num_classes,
        input_dims: model.input_dims.clone(),
        tensors,
    };
    fs::write(dir.join(CHECKPOINT_MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
    fs::write(dir.join(CHECKPOINT_TENSORS), bin)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<HgnnModel> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(CHECKPOINT_MANIFEST))?)?;
    let bin = fs::read(dir.join(CHECKPOINT_TENSORS))?;
    let vals: Vec<f64> = bin
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let mut weights = BTreeMap::new();
    for t in manifest.tensors {
        let end = t.offset + t.rows * t.cols;
        let data = vals
            .get(t.offset..end)
            .ok_or_else(|| Error::Format("checkpoint tensor file truncated".into()))?;
        let w = Array2::from_shape_vec((t.rows, t.cols), data.to_vec()).map_err(|e| Error::Format(e.to_string()))?;
        weights.insert(
            ParamKey {
                relation: RelationId(t.relation),
                layer: t.layer,
            },
            w,
        );
    }
    Ok(HgnnModel {
        k: manifest.k,
        hidden: manifest.hidden,
        num_classes: manifest.num_classes,
        input_dims: manifest.input_dims,
        weights,
    })
}
