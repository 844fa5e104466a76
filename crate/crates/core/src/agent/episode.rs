use rand_chacha::ChaCha8Rng;

use super::{
    returns, reward, select_action, AgentError, LinkGroup, PolicyVariant, ReturnKind, SelectMode,
    StepRecord,
};
use crate::nn::{build_network, Arch, Mode, Network, Param, Tape, Tensor};

/// Layers of the body that form the observation network; the rest is the
/// recurrent context.
pub const OBSERVATION_LAYERS: usize = 5;

/// Observation + context network followed by a policy head.
#[derive(Debug, Clone)]
pub struct Agent {
    pub body: Network<f32>,
    pub head: Network<f32>,
    pub variant: PolicyVariant,
}

impl Agent {
    /// Fresh agent for `num_links` links observed through windows of
    /// `window_len` samples (two streams per link).
    pub fn new(
        num_links: usize,
        window_len: usize,
        variant: PolicyVariant,
        seed: u64,
    ) -> Result<Self, AgentError> {
        let body = build_network(
            Arch::MixedCnnLstm,
            &[2 * num_links, window_len],
            "agent.body",
            seed,
        )?;
        let hidden = body.output_shape().to_vec();
        let head_arch = match variant {
            PolicyVariant::Subset => Arch::PolicyHead { links: num_links },
            PolicyVariant::Single => Arch::PolicyHeadSoftmax { links: num_links },
        };
        let head = build_network(head_arch, &hidden, "agent.policy", seed ^ 0x5eed)?;
        Ok(Agent {
            body,
            head,
            variant,
        })
    }

    pub fn num_links(&self) -> usize {
        self.head.output_shape()[0]
    }

    pub fn window_shape(&self) -> &[usize] {
        &self.body.input_shape
    }

    /// State feature of one observation window.
    pub fn observe(&self, window: &Tensor<f32>) -> Result<Tensor<f32>, AgentError> {
        Ok(self.body.forward_prefix(window, OBSERVATION_LAYERS)?)
    }

    pub fn params(&self) -> impl Iterator<Item = &Param<f32>> {
        self.body.params().chain(self.head.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Param<f32>> {
        self.body.params_mut().chain(self.head.params_mut())
    }

    pub fn zero_grad(&mut self) {
        self.body.zero_grad();
        self.head.zero_grad();
    }

    /// Backpropagates loss gradients w.r.t. each step's policy probabilities
    /// through the head and, through time, the body.
    pub fn backward_episode(
        &mut self,
        tape: &EpisodeTape,
        dprobs: &[Vec<f64>],
    ) -> Result<(), AgentError> {
        if dprobs.len() != tape.head.len() {
            return Err(AgentError::Domain(format!(
                "{} gradients for {} steps",
                dprobs.len(),
                tape.head.len()
            )));
        }
        let shape = self.head.output_shape().to_vec();
        let mut dh = Vec::with_capacity(dprobs.len());
        for (t, d) in dprobs.iter().enumerate() {
            let dy = Tensor::from_vec(&shape, d.iter().map(|&v| v as f32).collect());
            dh.push(self.head.backward(&tape.head[t], &dy)?);
        }
        self.body.backward_through_time(&tape.body, &dh)?;
        Ok(())
    }
}

pub enum EpisodeMode<'a> {
    /// Deterministic: greedy actions, no caches.
    Greedy,
    /// Sampled actions and caches for the backward pass.
    Train(&'a mut ChaCha8Rng),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub probs: Vec<f64>,
    pub group: LinkGroup,
    /// Classifier distribution for `group`.
    pub p: Vec<f64>,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The selection repeated on two consecutive steps.
    Converged,
    /// Observation windows ran out.
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub returns: Vec<f64>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_group(&self) -> &LinkGroup {
        &self
            .steps
            .last()
            .expect("episodes take at least one step")
            .group
    }

    pub fn final_distribution(&self) -> &[f64] {
        &self
            .steps
            .last()
            .expect("episodes take at least one step")
            .p
    }

    pub fn records(&self) -> Vec<StepRecord> {
        self.steps
            .iter()
            .zip(&self.returns)
            .map(|(s, &ret)| StepRecord {
                probs: s.probs.clone(),
                mask: s.group.mask.clone(),
                ret,
            })
            .collect()
    }
}

/// Forward caches of a training episode.
#[derive(Debug, Clone)]
pub struct EpisodeTape {
    body: Vec<Tape<f32>>,
    head: Vec<Tape<f32>>,
}

/// Runs the observe / update / act / classify loop over consecutive windows
/// until the selection repeats or the windows run out.
///
/// `classify` maps a link group to the classifier's class distribution;
/// rewards compare consecutive distributions at `gt`, starting from a uniform
/// prior.
pub fn run_episode(
    agent: &Agent,
    windows: &[Tensor<f32>],
    gt: usize,
    classify: &mut dyn FnMut(&LinkGroup) -> Result<Vec<f64>, AgentError>,
    mode: EpisodeMode<'_>,
    discount: f64,
    kind: ReturnKind,
) -> Result<(Trajectory, Option<EpisodeTape>), AgentError> {
    if windows.is_empty() {
        return Err(AgentError::Domain(
            "sample shorter than one observation window".into(),
        ));
    }
    let mut rng = match mode {
        EpisodeMode::Greedy => None,
        EpisodeMode::Train(rng) => Some(rng),
    };
    let mut state = agent.body.zero_state();
    let mut steps: Vec<Step> = Vec::new();
    let mut tape = rng.is_some().then(|| EpisodeTape {
        body: Vec::new(),
        head: Vec::new(),
    });
    let mut prev_p: Option<Vec<f64>> = None;
    let mut termination = Termination::MaxSteps;

    for window in windows {
        let body_mode = match rng.as_deref_mut() {
            Some(r) => Mode::Train(r),
            None => Mode::Eval,
        };
        let (h, body_tape) = agent.body.forward_step(window, &mut state, body_mode)?;
        let head_mode = match rng.as_deref_mut() {
            Some(r) => Mode::Train(r),
            None => Mode::Eval,
        };
        let (u, head_tape) = agent.head.forward(&h, head_mode)?;
        let probs: Vec<f64> = u.data.iter().map(|&v| v as f64).collect();
        if let Some(t) = tape.as_mut() {
            t.body.push(body_tape);
            t.head.push(head_tape);
        }
        let group = match rng.as_deref_mut() {
            Some(r) => select_action(&probs, SelectMode::Sample, agent.variant, Some(r)),
            None => select_action(&probs, SelectMode::Greedy, agent.variant, None),
        };
        let p = classify(&group)?;
        let prior = prev_p
            .take()
            .unwrap_or_else(|| vec![1.0 / p.len() as f64; p.len()]);
        let r = reward(&p, &prior, gt)?;
        let repeated = steps.last().is_some_and(|s| s.group == group);
        prev_p = Some(p.clone());
        steps.push(Step {
            probs,
            group,
            p,
            reward: r,
        });
        if repeated {
            termination = Termination::Converged;
            break;
        }
    }
    let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
    let rets = returns(&rewards, discount, kind);
    Ok((
        Trajectory {
            steps,
            returns: rets,
            termination,
        },
        tape,
    ))
}
