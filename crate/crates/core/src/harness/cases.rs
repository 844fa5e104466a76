use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{LinkGroup, PolicyVariant};
use crate::nn::HyperParams;
use crate::sim::{mix_seed, Environment};
use crate::{Error, Result};

/// Link-exploitation strategy under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkPolicy {
    /// Subset chosen by the agent.
    AgentSubset,
    /// The two most perpendicular links nearest the target.
    OrthogonalPair,
    AllLinks,
    /// One uniformly drawn link per sample.
    RandomSingle,
    /// Single link chosen by the agent.
    AgentSingle,
}

impl LinkPolicy {
    pub fn from_case(case: u8) -> Result<Self> {
        match case {
            1 => Ok(LinkPolicy::AgentSubset),
            2 => Ok(LinkPolicy::OrthogonalPair),
            3 => Ok(LinkPolicy::AllLinks),
            4 => Ok(LinkPolicy::RandomSingle),
            5 => Ok(LinkPolicy::AgentSingle),
            _ => Err(Error::Usage(format!("case must be 1..=5, got {case}"))),
        }
    }

    pub fn case(&self) -> u8 {
        match self {
            LinkPolicy::AgentSubset => 1,
            LinkPolicy::OrthogonalPair => 2,
            LinkPolicy::AllLinks => 3,
            LinkPolicy::RandomSingle => 4,
            LinkPolicy::AgentSingle => 5,
        }
    }

    pub fn agent_variant(&self) -> Option<PolicyVariant> {
        match self {
            LinkPolicy::AgentSubset => Some(PolicyVariant::Subset),
            LinkPolicy::AgentSingle => Some(PolicyVariant::Single),
            _ => None,
        }
    }

    pub fn uses_agent(&self) -> bool {
        self.agent_variant().is_some()
    }

    /// Group of a fixed (non-agent) policy for a sample at `location`.
    /// `rng` feeds the random single-link draw.
    pub fn fixed_group(
        &self,
        env: &Environment,
        location: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<LinkGroup> {
        let l = env.num_links();
        match self {
            LinkPolicy::OrthogonalPair => {
                let (a, b) = env.orthogonal_pair(location)?;
                let mut mask = vec![false; l];
                mask[a] = true;
                mask[b] = true;
                Ok(LinkGroup::new(mask))
            }
            LinkPolicy::AllLinks => Ok(LinkGroup::all(l)),
            LinkPolicy::RandomSingle => Ok(LinkGroup::single(l, rng.gen_range(0..l))),
            LinkPolicy::AgentSubset | LinkPolicy::AgentSingle => Err(Error::Usage(
                "agent-driven cases have no fixed link group".into(),
            )),
        }
    }
}

/// Per-sample generator for evaluation-time draws, independent of
/// evaluation order.
pub(crate) fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed ^ mix_seed(index as u64 + 1)))
}

/// One comparison case: link policy, classifier depth and hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub policy: LinkPolicy,
    pub cnn: usize,
    pub hyper: HyperParams,
}

impl CaseSpec {
    /// Case defaults: joint hyperparameters for agent cases, supervised ones
    /// otherwise.
    pub fn new(case: u8, cnn: usize) -> Result<Self> {
        let policy = LinkPolicy::from_case(case)?;
        if !(1..=4).contains(&cnn) {
            return Err(Error::Usage(format!("cnn must be 1..=4, got {cnn}")));
        }
        let hyper = if policy.uses_agent() {
            HyperParams::joint()
        } else {
            HyperParams::supervised()
        };
        Ok(CaseSpec { policy, cnn, hyper })
    }

    pub fn case(&self) -> u8 {
        self.policy.case()
    }
}
