//! Binary checkpoints: a little-endian `u64` header length, a JSON header
//! (version, config, array directory), then for each array in directory
//! order its values, first moments and second moments as little-endian
//! `f64`.

use std::path::{Path, PathBuf};

use flowsite_core::diff::Tensor;
use flowsite_core::flow::FlowNetwork;
use flowsite_core::model::FlowModel;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Optimizer steps taken on this array.
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub config: RunConfig,
    /// Epochs completed.
    pub epoch: u64,
    /// Training randomness is derived from the seed and the epoch, so the
    /// pair is the complete generator state.
    pub rng_seed: u64,
    /// Best validation score seen so far, if any.
    pub best: Option<f64>,
    pub arrays: Vec<ArrayEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("bad checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("checkpoint version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("array {name:?}: {msg}")]
    Array { name: String, msg: String },
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub epoch: u64,
    pub best: Option<f64>,
    pub model: FlowModel,
}

pub fn encode(config: &RunConfig, epoch: u64, best: Option<f64>, model: &FlowModel) -> Result<Vec<u8>, CheckpointError> {
    let params = model.params();
    let header = Header {
        version: CHECKPOINT_VERSION,
        config: config.clone(),
        epoch,
        rng_seed: config.seed,
        best,
        arrays: params
            .iter()
            .map(|p| ArrayEntry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                step: p.step,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(8 + json.len() + params.num_weights() * 24);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in params.iter() {
        for t in [&p.value, &p.m, &p.v] {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let len = u64::from_le_bytes(bytes.get(..8).ok_or(CheckpointError::Truncated)?.try_into().expect("8 bytes")) as usize;
    let json = bytes.get(8..8 + len).ok_or(CheckpointError::Truncated)?;
    // Look at the version before the rest so old files fail clearly.
    #[derive(Deserialize)]
    struct Version {
        version: u32,
    }
    let v: Version = serde_json::from_slice(json)?;
    if v.version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version {
            found: v.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let header: Header = serde_json::from_slice(json)?;
    let mut model = FlowModel::new(header.config.model());
    let mut data = bytes[8 + len..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let store = model.params_mut();
    if store.len() != header.arrays.len() {
        return Err(CheckpointError::Array {
            name: String::new(),
            msg: format!("model has {} arrays, checkpoint {}", store.len(), header.arrays.len()),
        });
    }
    for entry in &header.arrays {
        let err = |msg: String| CheckpointError::Array { name: entry.name.clone(), msg };
        let id = store.find(&entry.name).ok_or_else(|| err("not part of the model".into()))?;
        let p = store.get_mut(id);
        if p.value.shape() != entry.shape.as_slice() {
            return Err(err(format!("shape {:?}, model expects {:?}", entry.shape, p.value.shape())));
        }
        let n = p.value.len();
        let mut read = || -> Result<Tensor, CheckpointError> {
            let v: Vec<f64> = data.by_ref().take(n).collect();
            if v.len() != n {
                return Err(CheckpointError::Truncated);
            }
            Ok(Tensor::new(&entry.shape, v))
        };
        p.value = read()?;
        p.m = read()?;
        p.v = read()?;
        p.step = entry.step;
    }
    if data.next().is_some() {
        return Err(CheckpointError::Array {
            name: String::new(),
            msg: "trailing data".into(),
        });
    }
    Ok(Checkpoint {
        config: header.config,
        epoch: header.epoch,
        best: header.best,
        model,
    })
}

pub fn save(path: &Path, config: &RunConfig, epoch: u64, best: Option<f64>, model: &FlowModel) -> Result<(), CheckpointError> {
    let bytes = encode(config, epoch, best, model)?;
    std::fs::write(path, bytes).map_err(|source| CheckpointError::Io { path: path.into(), source })
}

pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io { path: path.into(), source })?;
    decode(&bytes)
}
