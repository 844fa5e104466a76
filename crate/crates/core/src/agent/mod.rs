//! Link-selection agent: per-link policy, action selection, rewards and
//! returns, the episode loop and the agent-side losses.

mod episode;
mod loss;
mod policy;
mod returns;

pub use episode::{
    run_episode, Agent, EpisodeMode, EpisodeTape, Step, Termination, Trajectory, OBSERVATION_LAYERS,
};
pub use loss::{
    action_bce_grad, action_bce_loss, agent_loss, log_prob, log_prob_grad, reinforce_loss,
    StepRecord, PROB_CLAMP,
};
pub use policy::{select_action, LinkGroup, PolicyVariant, SelectMode};
pub use returns::{discounted_returns, forward_returns, returns, reward, ReturnKind};

use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}
