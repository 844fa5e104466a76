use serde::{Deserialize, Serialize};

use super::AgentError;

/// Per-step reward: improvement of the ground-truth class probability.
pub fn reward(p_t: &[f64], p_prev: &[f64], gt: usize) -> Result<f64, AgentError> {
    if gt >= p_t.len() || gt >= p_prev.len() {
        return Err(AgentError::Domain(format!(
            "class {gt} outside {} classes",
            p_t.len()
        )));
    }
    Ok(p_t[gt] - p_prev[gt])
}

/// Which way rewards are discounted into returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnKind {
    /// `G_t = sum_{k=0}^{t} psi^k R_{t-k}`: accumulates past rewards.
    Backward,
    /// `G_t = sum_{k>=0} psi^k R_{t+k}`: the textbook forward return.
    Forward,
}

/// `G_t = sum_{k=0}^{t} psi^k R_{t-k}`.
pub fn discounted_returns(rewards: &[f64], psi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(rewards.len());
    let mut acc = 0.0;
    for &r in rewards {
        acc = r + psi * acc;
        out.push(acc);
    }
    out
}

/// `G_t = sum_{k=0}^{T-1-t} psi^k R_{t+k}`.
pub fn forward_returns(rewards: &[f64], psi: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, &r) in rewards.iter().enumerate().rev() {
        acc = r + psi * acc;
        out[t] = acc;
    }
    out
}

pub fn returns(rewards: &[f64], psi: f64, kind: ReturnKind) -> Vec<f64> {
    match kind {
        ReturnKind::Backward => discounted_returns(rewards, psi),
        ReturnKind::Forward => forward_returns(rewards, psi),
    }
}
