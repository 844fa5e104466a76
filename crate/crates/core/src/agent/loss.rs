use super::{AgentError, PolicyVariant};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-7;

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Derivative of the clamp: zero where it is active.
fn clamp_slope(p: f64) -> f64 {
    if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
        1.0
    } else {
        0.0
    }
}

/// Log-probability of taking `mask` under `probs`.
///
/// Subset: `sum_xi [m log u + (1 - m) log(1 - u)]`. Single: `log u` of the
/// chosen link.
pub fn log_prob(probs: &[f64], mask: &[bool], variant: PolicyVariant) -> f64 {
    probs
        .iter()
        .zip(mask)
        .map(|(&u, &m)| match (variant, m) {
            (_, true) => clamp(u).ln(),
            (PolicyVariant::Subset, false) => (1.0 - clamp(u)).ln(),
            (PolicyVariant::Single, false) => 0.0,
        })
        .sum()
}

/// Gradient of [`log_prob`] w.r.t. `probs`.
pub fn log_prob_grad(probs: &[f64], mask: &[bool], variant: PolicyVariant) -> Vec<f64> {
    probs
        .iter()
        .zip(mask)
        .map(|(&u, &m)| {
            let c = clamp(u);
            clamp_slope(u)
                * match (variant, m) {
                    (_, true) => 1.0 / c,
                    (PolicyVariant::Subset, false) => -1.0 / (1.0 - c),
                    (PolicyVariant::Single, false) => 0.0,
                }
        })
        .collect()
}

/// One decision of one episode as needed by the REINFORCE estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub probs: Vec<f64>,
    pub mask: Vec<bool>,
    pub ret: f64,
}

/// `L_J = -(1/K) sum_k sum_t log pi(u_{t,k}) G_{t,k}` over `K` episodes.
pub fn reinforce_loss(
    episodes: &[Vec<StepRecord>],
    variant: PolicyVariant,
) -> Result<f64, AgentError> {
    if episodes.is_empty() {
        return Err(AgentError::Domain(
            "REINFORCE loss over an empty batch".into(),
        ));
    }
    let total: f64 = episodes
        .iter()
        .flatten()
        .map(|s| log_prob(&s.probs, &s.mask, variant) * s.ret)
        .sum();
    Ok(-total / episodes.len() as f64)
}

/// `L_U = -(1/L) sum_t sum_xi [y log u + (1 - y) log(1 - u)]` for one
/// episode, with `y` the per-link ground truth held constant over steps.
pub fn action_bce_loss(probs: &[Vec<f64>], truth: &[bool]) -> Result<f64, AgentError> {
    let l = truth.len();
    if l == 0 {
        return Err(AgentError::Domain("no links".into()));
    }
    let mut total = 0.0;
    for (t, u) in probs.iter().enumerate() {
        if u.len() != l {
            return Err(AgentError::Domain(format!(
                "step {t} has {} probabilities for {l} links",
                u.len()
            )));
        }
        total += u
            .iter()
            .zip(truth)
            .map(|(&u, &y)| {
                if y {
                    clamp(u).ln()
                } else {
                    (1.0 - clamp(u)).ln()
                }
            })
            .sum::<f64>();
    }
    Ok(-total / l as f64)
}

/// Gradient of one step's share of [`action_bce_loss`] w.r.t. its probabilities.
pub fn action_bce_grad(probs: &[f64], truth: &[bool]) -> Vec<f64> {
    let l = truth.len() as f64;
    probs
        .iter()
        .zip(truth)
        .map(|(&u, &y)| {
            let c = clamp(u);
            let d = if y { 1.0 / c } else { -1.0 / (1.0 - c) };
            -clamp_slope(u) * d / l
        })
        .collect()
}

/// `L_agent = lambda1 * L_J + L_U`.
pub fn agent_loss(l_j: f64, l_u: f64, lambda1: f64) -> f64 {
    lambda1 * l_j + l_u
}
