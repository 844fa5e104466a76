use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::layer::Param;
use super::NnError;

pub const CHECKPOINT_FORMAT: &str = "CKP1";
pub const MANIFEST_FILE: &str = "model.json";
pub const BLOB_FILE: &str = "model.bin";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    /// Byte offset into the blob.
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub tensors: Vec<TensorEntry>,
    /// Free-form description of how the tensors are wired (architectures,
    /// case, hyperparameters).
    pub meta: serde_json::Value,
}

/// Tensor values keyed by name.
pub type TensorMap = BTreeMap<String, (Vec<usize>, Vec<f32>)>;

fn io_err(path: &Path, e: std::io::Error) -> NnError {
    NnError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

/// Writes `model.json` and `model.bin` into `dir` (created if missing).
pub fn save_checkpoint<'a>(
    dir: &Path,
    meta: serde_json::Value,
    params: impl IntoIterator<Item = &'a Param<f32>>,
) -> Result<CheckpointManifest, NnError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut blob = Vec::new();
    let mut tensors = Vec::new();
    for p in params {
        if tensors.iter().any(|t: &TensorEntry| t.name == p.name) {
            return Err(NnError::Checkpoint(format!(
                "duplicate tensor name {}",
                p.name
            )));
        }
        tensors.push(TensorEntry {
            name: p.name.clone(),
            shape: p.shape.clone(),
            dtype: "f32".into(),
            offset: blob.len() as u64,
        });
        let start = blob.len();
        blob.resize(start + 4 * p.value.len(), 0);
        LittleEndian::write_f32_into(&p.value, &mut blob[start..]);
    }
    let manifest = CheckpointManifest {
        format: CHECKPOINT_FORMAT.into(),
        tensors,
        meta,
    };
    let json =
        serde_json::to_vec_pretty(&manifest).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    let mpath = dir.join(MANIFEST_FILE);
    fs::File::create(&mpath)
        .and_then(|mut f| f.write_all(&json))
        .map_err(|e| io_err(&mpath, e))?;
    let bpath = dir.join(BLOB_FILE);
    fs::File::create(&bpath)
        .and_then(|mut f| f.write_all(&blob))
        .map_err(|e| io_err(&bpath, e))?;
    Ok(manifest)
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(dir: &Path) -> Result<(CheckpointManifest, TensorMap), NnError> {
    let mpath = dir.join(MANIFEST_FILE);
    let json = fs::read(&mpath).map_err(|e| io_err(&mpath, e))?;
    let manifest: CheckpointManifest = serde_json::from_slice(&json)
        .map_err(|e| NnError::Checkpoint(format!("{}: {e}", mpath.display())))?;
    if manifest.format != CHECKPOINT_FORMAT {
        return Err(NnError::Checkpoint(format!(
            "unknown checkpoint format {:?}",
            manifest.format
        )));
    }
    let bpath = dir.join(BLOB_FILE);
    let mut blob = Vec::new();
    fs::File::open(&bpath)
        .and_then(|mut f| f.read_to_end(&mut blob))
        .map_err(|e| io_err(&bpath, e))?;
    let mut map = TensorMap::new();
    let mut expected_offset = 0u64;
    for t in &manifest.tensors {
        if t.dtype != "f32" {
            return Err(NnError::Checkpoint(format!(
                "tensor {} has unsupported dtype {}",
                t.name, t.dtype
            )));
        }
        let n: usize = t.shape.iter().product();
        if t.offset != expected_offset {
            return Err(NnError::Checkpoint(format!(
                "tensor {} at offset {}, expected {expected_offset}",
                t.name, t.offset
            )));
        }
        let start = t.offset as usize;
        let end = start + 4 * n;
        if end > blob.len() {
            return Err(NnError::Checkpoint(format!(
                "tensor {} runs past the end of {}",
                t.name,
                bpath.display()
            )));
        }
        let mut values = vec![0f32; n];
        LittleEndian::read_f32_into(&blob[start..end], &mut values);
        map.insert(t.name.clone(), (t.shape.clone(), values));
        expected_offset = end as u64;
    }
    if expected_offset as usize != blob.len() {
        return Err(NnError::Checkpoint(format!(
            "{} has {} trailing bytes",
            bpath.display(),
            blob.len() - expected_offset as usize
        )));
    }
    Ok((manifest, map))
}

/// Copies values from `map` into `params`, requiring an exact name/shape match.
pub fn restore_params<'a>(
    map: &TensorMap,
    params: impl IntoIterator<Item = &'a mut Param<f32>>,
) -> Result<(), NnError> {
    for p in params {
        let (shape, values) = map
            .get(&p.name)
            .ok_or_else(|| NnError::Checkpoint(format!("checkpoint lacks tensor {}", p.name)))?;
        if *shape != p.shape {
            return Err(NnError::Checkpoint(format!(
                "tensor {} has shape {shape:?}, network expects {:?}",
                p.name, p.shape
            )));
        }
        p.value.copy_from_slice(values);
    }
    Ok(())
}

/// SHA-256 over the manifest and blob bytes, hex encoded.
pub fn checkpoint_hash(dir: &Path) -> Result<String, NnError> {
    let mut hasher = Sha256::new();
    for f in [MANIFEST_FILE, BLOB_FILE] {
        let path = dir.join(f);
        hasher.update(fs::read(&path).map_err(|e| io_err(&path, e))?);
    }
    Ok(hex::encode(hasher.finalize()))
}
