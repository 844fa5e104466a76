use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::{sample_features, FeatureSet, FeatureSpec, SampleFeatures};
use crate::sim::{
    build_environment, CsdReader, CsdWriter, Dataset, DatasetManifest, Environment, SampleMeta,
    Split,
};
use crate::{Error, Result};

pub const DATASET_FILE: &str = "dataset.csd";
pub const MANIFEST_FILE: &str = "manifest.json";

/// JSON sidecar of a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub manifest: DatasetManifest,
    /// Every record of `dataset.csd`, train split first.
    pub samples: Vec<SampleMeta>,
}

/// Samples regenerated per parallel batch when writing.
const WRITE_CHUNK: usize = 32;

/// Streams every sample (train then test) into a CSD writer over `out`.
///
/// With `parallel` the samples are synthesised on the rayon pool in chunks;
/// the bytes are identical either way.
pub fn write_csd<W: Write>(
    env: &Environment,
    dataset: &Dataset,
    out: W,
    parallel: bool,
) -> Result<W> {
    let metas: Vec<&SampleMeta> = dataset.train.iter().chain(&dataset.test).collect();
    let mut writer = CsdWriter::new(out, env.csi_shape(), metas.len())?;
    for chunk in metas.chunks(WRITE_CHUNK) {
        let samples: Vec<_> = if parallel {
            chunk
                .par_iter()
                .map(|m| dataset.materialize(env, m))
                .collect::<std::result::Result<_, _>>()?
        } else {
            chunk
                .iter()
                .map(|m| dataset.materialize(env, m))
                .collect::<std::result::Result<_, _>>()?
        };
        for s in &samples {
            writer.write_sample(s)?;
        }
    }
    Ok(writer.finish()?)
}

/// Writes `dataset.csd` and `manifest.json` into `dir`.
pub fn write_dataset_dir(
    dir: &Path,
    env: &Environment,
    dataset: &Dataset,
    parallel: bool,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csd = dir.join(DATASET_FILE);
    let file = File::create(&csd).map_err(|e| Error::io(&csd, e))?;
    let mut out = write_csd(env, dataset, BufWriter::new(file), parallel)?;
    out.flush().map_err(|e| Error::io(&csd, e))?;
    let sidecar = DatasetSidecar {
        manifest: dataset.manifest.clone(),
        samples: dataset.train.iter().chain(&dataset.test).cloned().collect(),
    };
    let json = serde_json::to_vec_pretty(&sidecar).map_err(|e| Error::Data(e.to_string()))?;
    let mpath = dir.join(MANIFEST_FILE);
    std::fs::write(&mpath, json).map_err(|e| Error::io(&mpath, e))?;
    Ok(())
}

/// SHA-256 over `manifest.json` then `dataset.csd`, hex encoded.
pub fn dataset_hash(dir: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    for f in [MANIFEST_FILE, DATASET_FILE] {
        let path = dir.join(f);
        let mut file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        std::io::copy(&mut file, &mut hasher).map_err(|e| Error::io(&path, e))?;
    }
    Ok(hex::encode(hasher.finalize()))
}

/// A dataset directory opened for reading.
#[derive(Debug, Clone)]
pub struct DatasetDir {
    pub path: PathBuf,
    pub env: Environment,
    pub dataset: Dataset,
}

impl DatasetDir {
    pub fn open(dir: &Path) -> Result<Self> {
        let mpath = dir.join(MANIFEST_FILE);
        let bytes = std::fs::read(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let sidecar: DatasetSidecar = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Data(format!("{}: {e}", mpath.display())))?;
        let env = build_environment(sidecar.manifest.config.clone())?;
        let m = &sidecar.manifest;
        if sidecar.samples.len() != m.train_count + m.test_count {
            return Err(Error::Data(format!(
                "manifest lists {} samples but declares {} + {}",
                sidecar.samples.len(),
                m.train_count,
                m.test_count
            )));
        }
        let mut samples = sidecar.samples;
        let test = samples.split_off(m.train_count);
        if samples.iter().any(|s| s.split != Split::Train)
            || test.iter().any(|s| s.split != Split::Test)
        {
            return Err(Error::Data(
                "manifest sample order must be train then test".into(),
            ));
        }
        let dataset = Dataset {
            train: samples,
            test,
            manifest: sidecar.manifest,
        };
        Ok(DatasetDir {
            path: dir.to_path_buf(),
            env,
            dataset,
        })
    }

    /// Reads `dataset.csd`, checks every record against the manifest and
    /// computes features. Records of splits not requested are skipped.
    pub fn features(
        &self,
        spec: FeatureSpec,
        want_train: bool,
        want_test: bool,
    ) -> Result<FeatureSet> {
        let csd = self.path.join(DATASET_FILE);
        let file = File::open(&csd).map_err(|e| Error::io(&csd, e))?;
        let mut reader = CsdReader::new(BufReader::new(file))?;
        let h = reader.header();
        if h.shape() != self.env.csi_shape() {
            return Err(Error::Data(format!(
                "{} has shape {:?}, manifest implies {:?}",
                csd.display(),
                h.shape(),
                self.env.csi_shape()
            )));
        }
        let metas: Vec<&SampleMeta> = self
            .dataset
            .train
            .iter()
            .chain(&self.dataset.test)
            .collect();
        if h.sample_count as usize != metas.len() {
            return Err(Error::Data(format!(
                "{} holds {} samples, manifest lists {}",
                csd.display(),
                h.sample_count,
                metas.len()
            )));
        }
        let mut set = FeatureSet {
            spec,
            train: Vec::new(),
            test: Vec::new(),
        };
        for chunk in metas.chunks(WRITE_CHUNK) {
            let mut batch = Vec::with_capacity(chunk.len());
            for meta in chunk {
                let sample = reader
                    .next_sample()?
                    .ok_or_else(|| Error::Data(format!("{} ended early", csd.display())))?;
                if sample.activity != meta.activity
                    || sample.location != meta.location
                    || sample.seed != meta.seed
                {
                    return Err(Error::Data(format!(
                        "record {:?} #{} does not match the manifest",
                        meta.split, meta.index
                    )));
                }
                let wanted = match meta.split {
                    Split::Train => want_train,
                    Split::Test => want_test,
                };
                if wanted {
                    batch.push((sample, *meta));
                }
            }
            let feats: Vec<SampleFeatures> = batch
                .par_iter()
                .map(|(s, m)| sample_features(s, m, &spec))
                .collect::<Result<_>>()?;
            for f in feats {
                match f.split {
                    Split::Train => set.train.push(f),
                    Split::Test => set.test.push(f),
                }
            }
        }
        Ok(set)
    }
}
