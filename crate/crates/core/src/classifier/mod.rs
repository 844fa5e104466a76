//! Per-link CNN prediction on wavelet images, group averaging and the
//! classification objective.

use crate::agent::{AgentError, LinkGroup, PROB_CLAMP};
use crate::nn::{build_network, Arch, Mode, Network, NnError, Tape, Tensor};
use crate::preprocess::DwtImage;
use crate::NUM_CLASSES;

/// Image classifier shared by all links.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub net: Network<f32>,
}

impl Classifier {
    /// CNN `cnn` (1..=4) for `[2][side][side]` images.
    pub fn new(cnn: usize, side: usize, seed: u64) -> Result<Self, NnError> {
        let arch = Arch::cnn(cnn)
            .ok_or_else(|| NnError::Hyper(format!("unknown CNN index {cnn} (expected 1..=4)")))?;
        Ok(Classifier {
            net: build_network(arch, &[2, side, side], "classifier", seed)?,
        })
    }

    fn input(&self, image: &DwtImage) -> Result<Tensor<f32>, NnError> {
        let shape = &self.net.input_shape;
        if image.data.len() != shape.iter().product::<usize>() {
            return Err(NnError::Shape {
                layer: 0,
                expected: shape.clone(),
                got: vec![2, image.side, image.side],
            });
        }
        Ok(Tensor::from_vec(shape, image.data.clone()))
    }

    /// Class distribution predicted from one link's image (evaluation mode).
    pub fn predict_link(&self, image: &DwtImage) -> Result<Vec<f64>, NnError> {
        let (y, _) = self.net.forward(&self.input(image)?, Mode::Eval)?;
        Ok(y.data.iter().map(|&v| v as f64).collect())
    }

    /// Training-mode forward of one link, keeping the caches.
    pub fn forward_train(
        &self,
        image: &DwtImage,
        mode: Mode<'_>,
    ) -> Result<(Vec<f64>, Tape<f32>), NnError> {
        let (y, tape) = self.net.forward(&self.input(image)?, mode)?;
        Ok((y.data.iter().map(|&v| v as f64).collect(), tape))
    }

    /// Accumulates gradients for one link given `dL/dp` of its distribution.
    pub fn backward_link(&mut self, tape: &Tape<f32>, dp: &[f64]) -> Result<(), NnError> {
        let dy = Tensor::from_vec(&[dp.len()], dp.iter().map(|&v| v as f32).collect());
        self.net.backward(tape, &dy)?;
        Ok(())
    }
}

/// Mean of the member links' distributions. `per_link` holds one
/// distribution per link of the deployment.
pub fn predict_group(group: &LinkGroup, per_link: &[Vec<f64>]) -> Vec<f64> {
    let members: Vec<&Vec<f64>> = group.links().map(|l| &per_link[l]).collect();
    assert!(!members.is_empty(), "empty link group");
    mean_distribution(&members)
}

/// Arithmetic mean of distributions.
pub fn mean_distribution(members: &[&Vec<f64>]) -> Vec<f64> {
    let c = members[0].len();
    let mut p = vec![0.0; c];
    for m in members {
        for (a, b) in p.iter_mut().zip(m.iter()) {
            *a += b;
        }
    }
    let n = members.len() as f64;
    p.iter_mut().for_each(|v| *v /= n);
    p
}

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `L_P = -(1/C) sum_delta target_delta log p_delta` with `C` classes.
pub fn classification_loss_soft(p: &[f64], target: &[f64]) -> Result<f64, AgentError> {
    if p.len() != target.len() || p.is_empty() {
        return Err(AgentError::Domain(format!(
            "{} probabilities for {} targets",
            p.len(),
            target.len()
        )));
    }
    let c = p.len() as f64;
    Ok(-p
        .iter()
        .zip(target)
        .map(|(&p, &t)| t * clamp(p).ln())
        .sum::<f64>()
        / c)
}

/// [`classification_loss_soft`] with a one-hot target at `gt`.
pub fn classification_loss(p: &[f64], gt: usize) -> Result<f64, AgentError> {
    if gt >= p.len() {
        return Err(AgentError::Domain(format!(
            "class {gt} outside {} classes",
            p.len()
        )));
    }
    Ok(-clamp(p[gt]).ln() / p.len() as f64)
}

/// Gradient of [`classification_loss`] w.r.t. `p`.
pub fn classification_loss_grad(p: &[f64], gt: usize) -> Vec<f64> {
    let mut g = vec![0.0; p.len()];
    if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p[gt]) {
        g[gt] = -1.0 / (p[gt] * p.len() as f64);
    }
    g
}

/// `Loss = L_P + lambda2 * L_agent`.
pub fn overall_loss(l_p: f64, l_agent: f64, lambda2: f64) -> f64 {
    l_p + lambda2 * l_agent
}

/// Uniform distribution over the activity classes.
pub fn uniform_prior() -> Vec<f64> {
    vec![1.0 / NUM_CLASSES as f64; NUM_CLASSES]
}
