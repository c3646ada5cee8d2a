//! Frame-level anomaly scorer: a small attention encoder with optional
//! dual memory banks, its loss stack, a deterministic training loop, and
//! checkpoint serialization.

pub mod autograd;
pub mod loss;
pub mod model;
pub mod train;

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use loss::{loss_as, loss_as_detailed, loss_kl, loss_triplet};
pub use model::{ModelConfig, ScorerModel};
pub use train::{grad_check, train, LossWeights, TrainConfig, TrainOutcome};

use crate::{Error, Result};

/// One video's precomputed per-frame features, T x D row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub video: String,
    pub features: Array2<f64>,
}

impl FeatureSequence {
    pub fn new(video: impl Into<String>, features: Array2<f64>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::validation("empty feature matrix"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite feature entry"));
        }
        Ok(FeatureSequence { video: video.into(), features })
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"VAUC";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointManifest {
    version: u32,
    config: ModelConfig,
    weights: LossWeights,
    seed: u64,
}

/// A trained model plus the settings needed to reproduce or resume it.
/// On disk: a versioned binary parameter blob with a JSON manifest sidecar
/// (`<path>.json`) carrying the architecture dims, loss weights and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ScorerModel,
    pub weights: LossWeights,
    pub seed: u64,
}

impl Checkpoint {
    /// Writes the blob and manifest atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut blob = Vec::new();
        blob.extend_from_slice(CHECKPOINT_MAGIC);
        blob.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        blob.extend_from_slice(&(self.model.params.len() as u32).to_le_bytes());
        for p in &self.model.params {
            blob.extend_from_slice(&(p.nrows() as u32).to_le_bytes());
            blob.extend_from_slice(&(p.ncols() as u32).to_le_bytes());
            for &x in p.iter() {
                blob.extend_from_slice(&x.to_le_bytes());
            }
        }
        let manifest = CheckpointManifest {
            version: CHECKPOINT_VERSION,
            config: self.model.config.clone(),
            weights: self.weights,
            seed: self.seed,
        };
        crate::io::atomic_write(path, &blob)?;
        crate::io::atomic_write(
            &manifest_path(path),
            serde_json::to_string_pretty(&manifest)?.as_bytes(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let manifest_file = manifest_path(path);
        let manifest: CheckpointManifest =
            serde_json::from_str(&std::fs::read_to_string(&manifest_file).map_err(|e| {
                Error::Malformed { path: manifest_file.display().to_string(), message: e.to_string() }
            })?)
            .map_err(|e| Error::Malformed {
                path: manifest_file.display().to_string(),
                message: e.to_string(),
            })?;
        let malformed = |message: String| Error::Malformed {
            path: path.display().to_string(),
            message,
        };
        if manifest.version != CHECKPOINT_VERSION {
            return Err(malformed(format!("unsupported checkpoint version {}", manifest.version)));
        }

        let blob = std::fs::read(path)
            .map_err(|e| malformed(e.to_string()))?;
        let mut cursor = 0usize;
        let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
            let end = *cursor + n;
            let slice = blob
                .get(*cursor..end)
                .ok_or_else(|| malformed("truncated checkpoint blob".into()))?;
            *cursor = end;
            Ok(slice)
        };
        if take(&mut cursor, 4)? != CHECKPOINT_MAGIC {
            return Err(malformed("bad magic, not a checkpoint".into()));
        }
        let read_u32 = |cursor: &mut usize| -> Result<u32> {
            Ok(u32::from_le_bytes(take(cursor, 4)?.try_into().unwrap()))
        };
        if read_u32(&mut cursor)? != CHECKPOINT_VERSION {
            return Err(malformed("blob/manifest version mismatch".into()));
        }
        let count = read_u32(&mut cursor)? as usize;
        let shapes = manifest.config.param_shapes();
        if count != shapes.len() {
            return Err(malformed(format!(
                "expected {} parameter tensors, blob has {count}",
                shapes.len()
            )));
        }
        let mut params = Vec::with_capacity(count);
        for &(name, (rows, cols)) in &shapes {
            let r = read_u32(&mut cursor)? as usize;
            let c = read_u32(&mut cursor)? as usize;
            if (r, c) != (rows, cols) {
                return Err(malformed(format!(
                    "{name}: expected {rows}x{cols}, blob has {r}x{c}"
                )));
            }
            let bytes = take(&mut cursor, r * c * 8)?;
            let data: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            if data.iter().any(|x| !x.is_finite()) {
                return Err(malformed(format!("{name}: non-finite parameter")));
            }
            params.push(Array2::from_shape_vec((r, c), data).expect("shape checked"));
        }
        if cursor != blob.len() {
            return Err(malformed("trailing bytes after parameters".into()));
        }
        Ok(Checkpoint {
            model: ScorerModel { config: manifest.config, params },
            weights: manifest.weights,
            seed: manifest.seed,
        })
    }
}

fn manifest_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}
