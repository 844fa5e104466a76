use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cases::CaseSpec;
use super::features::FeatureSpec;
use crate::agent::Agent;
use crate::classifier::Classifier;
use crate::nn::{checkpoint_hash, load_checkpoint, restore_params, save_checkpoint, Param};
use crate::{Error, Result};

/// Trained networks of one case.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: CaseSpec,
    pub features: FeatureSpec,
    pub num_links: usize,
    pub seed: u64,
    pub classifier: Classifier,
    pub agent: Option<Agent>,
}

/// What a checkpoint manifest records besides the tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub spec: CaseSpec,
    pub features: FeatureSpec,
    pub num_links: usize,
    pub seed: u64,
}

impl Model {
    /// Freshly initialised networks for `spec`.
    pub fn new(spec: CaseSpec, features: FeatureSpec, num_links: usize, seed: u64) -> Result<Self> {
        let classifier = Classifier::new(
            spec.cnn,
            features.image_side,
            crate::sim::mix_seed(seed ^ 0xc1a5),
        )?;
        let agent = match spec.policy.agent_variant() {
            Some(v) => Some(Agent::new(
                num_links,
                features.window_len,
                v,
                crate::sim::mix_seed(seed ^ 0xa9e7),
            )?),
            None => None,
        };
        Ok(Model {
            spec,
            features,
            num_links,
            seed,
            classifier,
            agent,
        })
    }

    pub fn meta(&self) -> ModelMeta {
        ModelMeta {
            spec: self.spec,
            features: self.features,
            num_links: self.num_links,
            seed: self.seed,
        }
    }

    pub fn params(&self) -> impl Iterator<Item = &Param<f32>> {
        self.agent
            .iter()
            .flat_map(|a| a.params())
            .chain(self.classifier.net.params())
    }

    /// Writes the CKP1 checkpoint into `dir` and returns its hash.
    pub fn save(&self, dir: &Path) -> Result<String> {
        let meta = serde_json::to_value(self.meta()).map_err(|e| Error::Data(e.to_string()))?;
        save_checkpoint(dir, meta, self.params())?;
        Ok(checkpoint_hash(dir)?)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (manifest, tensors) = load_checkpoint(dir)?;
        let meta: ModelMeta = serde_json::from_value(manifest.meta).map_err(|e| {
            Error::Data(format!(
                "{}: unreadable model description: {e}",
                dir.display()
            ))
        })?;
        let mut model = Model::new(meta.spec, meta.features, meta.num_links, meta.seed)?;
        if tensors.len() != model.params().count() {
            return Err(Error::Data(format!(
                "checkpoint holds {} tensors, case {} with CNN {} needs {}",
                tensors.len(),
                meta.spec.case(),
                meta.spec.cnn,
                model.params().count()
            )));
        }
        if let Some(agent) = model.agent.as_mut() {
            restore_params(&tensors, agent.params_mut())?;
        }
        restore_params(&tensors, model.classifier.net.params_mut())?;
        Ok(model)
    }
}
