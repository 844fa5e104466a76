use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cases::CaseSpec;
use super::eval::predict;
use super::features::{FeatureSpec, SampleFeatures};
use super::model::Model;
use crate::agent::{
    action_bce_grad, action_bce_loss, log_prob, log_prob_grad, run_episode, EpisodeMode, LinkGroup,
    ReturnKind,
};
use crate::classifier::{
    classification_loss, classification_loss_grad, mean_distribution, predict_group,
};
use crate::nn::{Adam, Mode};
use crate::sim::{mix_seed, Environment};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Overrides the case's epoch budget.
    pub epochs: Option<usize>,
    pub seed: u64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Every n-th training sample is held out for validation; 0 disables
    /// validation and early stopping.
    pub holdout_every: usize,
    pub returns: ReturnKind,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: None,
            seed: 0,
            patience: 5,
            holdout_every: 10,
            returns: ReturnKind::Backward,
        }
    }
}

/// Mean losses of one epoch and the validation score after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub steps: usize,
    pub loss: f64,
    pub loss_p: f64,
    pub loss_j: f64,
    pub loss_u: f64,
    pub val_accuracy: Option<f64>,
    pub val_loss: Option<f64>,
    /// Mean Jaccard index of the selected links against the planted masks.
    pub val_jaccard: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub log: Vec<EpochLog>,
    /// Epoch whose weights were kept (1-based; 0 = initial weights).
    pub best_epoch: usize,
    /// Set when training stopped on a numeric failure; `model` then holds the
    /// last good weights.
    pub failure: Option<String>,
}

#[derive(Default)]
struct Sums {
    loss: f64,
    p: f64,
    j: f64,
    u: f64,
    n: usize,
}

/// Trains the case's networks on `train`.
pub fn train(
    train: &[SampleFeatures],
    env: &Environment,
    spec: CaseSpec,
    features: FeatureSpec,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    spec.hyper.validate()?;
    if train.is_empty() {
        return Err(Error::Data("no training samples".into()));
    }
    let mut model = Model::new(spec, features, env.num_links(), opts.seed)?;
    let (fit, val): (Vec<&SampleFeatures>, Vec<&SampleFeatures>) = if opts.holdout_every > 0 {
        train
            .iter()
            .enumerate()
            .partition(|(i, _)| i % opts.holdout_every != opts.holdout_every - 1)
    } else {
        (train.iter().enumerate().collect(), Vec::new())
    }
    .map_pair(|v| v.into_iter().map(|(_, f)| f).collect());
    if fit.is_empty() {
        return Err(Error::Data(
            "validation hold-out leaves no training samples".into(),
        ));
    }

    let hyper = spec.hyper;
    let epochs = opts.epochs.unwrap_or(hyper.epochs);
    let mut cls_opt = Adam::new(hyper.learning_rate, hyper.epsilon);
    let mut agent_opt = Adam::new(hyper.learning_rate, hyper.epsilon);
    let mut order_rng = ChaCha8Rng::seed_from_u64(mix_seed(opts.seed ^ (0x5u64 << 32)));
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(opts.seed ^ (0x7u64 << 40)));
    let mut order: Vec<usize> = (0..fit.len()).collect();

    let mut log = Vec::new();
    let mut best = (
        validation_score(&model, env, &val, opts.seed)?,
        0usize,
        model.clone(),
    );
    let mut since_best = 0;
    let mut failure = None;

    'epochs: for epoch in 1..=epochs {
        order.shuffle(&mut order_rng);
        let mut sums = Sums::default();
        let mut steps = 0;
        for batch in order.chunks(hyper.batch_size) {
            let k = batch.len() as f64;
            for &i in batch {
                let f = fit[i];
                let r = if spec.policy.uses_agent() {
                    agent_sample(&mut model, f, k, opts.returns, &mut rng)
                } else {
                    let group = spec.policy.fixed_group(env, f.location, &mut rng)?;
                    classifier_sample(&mut model, f, &group, k, &mut rng).map(|lp| (lp, 0.0, 0.0))
                };
                let (lp, lj, lu) = r?;
                let total = lp + hyper.lambda2 * (hyper.lambda1 * lj + lu);
                if !total.is_finite() {
                    failure = Some(format!(
                        "non-finite loss in epoch {epoch}, sample {}",
                        f.index
                    ));
                    break 'epochs;
                }
                sums.loss += total;
                sums.p += lp;
                sums.j += lj;
                sums.u += lu;
                sums.n += 1;
            }
            let stepped = cls_opt
                .step(model.classifier.net.params_mut())
                .and_then(|_| match model.agent.as_mut() {
                    Some(a) => agent_opt.step(a.params_mut()),
                    None => Ok(()),
                });
            if let Err(e) = stepped {
                failure = Some(format!("epoch {epoch}: {e}"));
                break 'epochs;
            }
            steps += 1;
        }
        let n = sums.n.max(1) as f64;
        let v = if val.is_empty() {
            None
        } else {
            Some(validation_score(&model, env, &val, opts.seed)?)
        };
        let (val_accuracy, val_loss, val_jaccard) =
            (v.map(|v| v.0), v.map(|v| v.1), v.map(|v| v.2));
        log::info!(
            "case {} epoch {epoch}: loss {:.4} (p {:.4}, j {:.4}, u {:.4}) val acc {:?}",
            spec.case(),
            sums.loss / n,
            sums.p / n,
            sums.j / n,
            sums.u / n,
            val_accuracy
        );
        log.push(EpochLog {
            epoch,
            steps,
            loss: sums.loss / n,
            loss_p: sums.p / n,
            loss_j: sums.j / n,
            loss_u: sums.u / n,
            val_accuracy,
            val_loss,
            val_jaccard,
        });
        if val.is_empty() {
            best = (best.0, epoch, model.clone());
            continue;
        }
        let score = v.expect("validation ran");
        if better(score, best.0) {
            best = (score, epoch, model.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= opts.patience {
                break;
            }
        }
    }
    let (_, best_epoch, best_model) = best;
    Ok(TrainOutcome {
        model: best_model,
        log,
        best_epoch,
        failure,
    })
}

trait MapPair<T> {
    fn map_pair<U>(self, f: impl Fn(T) -> U) -> (U, U);
}

impl<T> MapPair<T> for (T, T) {
    fn map_pair<U>(self, f: impl Fn(T) -> U) -> (U, U) {
        (f(self.0), f(self.1))
    }
}

/// Higher validation accuracy wins; equal accuracy is broken by lower loss.
fn better(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Accuracy and mean loss of greedy predictions. The loss is `L_P`, plus
/// `lambda2 * L_U` when an agent picks the links.
fn validation_score(
    model: &Model,
    env: &Environment,
    val: &[&SampleFeatures],
    seed: u64,
) -> Result<(f64, f64, f64)> {
    if val.is_empty() {
        return Ok((0.0, f64::INFINITY, 0.0));
    }
    let lambda2 = model.spec.hyper.lambda2;
    let mut correct = 0;
    let mut loss = 0.0;
    let mut jaccard = 0.0;
    for f in val {
        let p = predict(model, env, f, seed)?;
        jaccard += p.group.jaccard(&f.mask);
        correct += usize::from(p.class == f.label());
        loss += classification_loss(&p.distribution, f.label())?;
        if !p.step_probs.is_empty() {
            loss += lambda2 * action_bce_loss(&p.step_probs, &f.mask)?;
        }
    }
    let n = val.len() as f64;
    Ok((correct as f64 / n, loss / n, jaccard / n))
}

/// Train-mode pass of the classifier over `group`; accumulates the gradient
/// of `L_P / k` and returns `L_P`.
fn classifier_sample(
    model: &mut Model,
    f: &SampleFeatures,
    group: &LinkGroup,
    k: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut tapes = Vec::new();
    let mut dists = Vec::new();
    for l in group.links() {
        let (p, tape) = model
            .classifier
            .forward_train(&f.images[l], Mode::Train(rng))?;
        dists.push(p);
        tapes.push(tape);
    }
    let refs: Vec<&Vec<f64>> = dists.iter().collect();
    let p = mean_distribution(&refs);
    let gt = f.label();
    let lp = classification_loss(&p, gt)?;
    let scale = 1.0 / (k * tapes.len() as f64);
    let dp: Vec<f64> = classification_loss_grad(&p, gt)
        .iter()
        .map(|g| g * scale)
        .collect();
    for tape in &tapes {
        model.classifier.backward_link(tape, &dp)?;
    }
    Ok(lp)
}

/// One training episode: REINFORCE and action-BCE gradients into the agent,
/// classification gradient through the terminal group into the classifier.
/// Returns the sample's `(L_P, L_J, L_U)`.
fn agent_sample(
    model: &mut Model,
    f: &SampleFeatures,
    k: f64,
    kind: ReturnKind,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, f64)> {
    let hyper = model.spec.hyper;
    let per_link: Vec<Vec<f64>> = f
        .images
        .iter()
        .map(|img| model.classifier.predict_link(img))
        .collect::<std::result::Result<_, _>>()?;
    let agent = model.agent.as_mut().expect("agent case");
    let variant = agent.variant;
    let gt = f.label();
    let mut classify = |g: &LinkGroup| Ok(predict_group(g, &per_link));
    let (traj, tape) = run_episode(
        agent,
        &f.windows,
        gt,
        &mut classify,
        EpisodeMode::Train(rng),
        hyper.discount,
        kind,
    )?;
    let tape = tape.expect("training episodes keep caches");

    let mut lj = 0.0;
    let mut dprobs = Vec::with_capacity(traj.len());
    for (step, &g) in traj.steps.iter().zip(&traj.returns) {
        lj -= log_prob(&step.probs, &step.group.mask, variant) * g;
        let dj = log_prob_grad(&step.probs, &step.group.mask, variant);
        let du = action_bce_grad(&step.probs, &f.mask);
        dprobs.push(
            dj.iter()
                .zip(&du)
                .map(|(&dj, &du)| hyper.lambda2 * (hyper.lambda1 * -g * dj + du) / k)
                .collect::<Vec<f64>>(),
        );
    }
    let probs: Vec<Vec<f64>> = traj.steps.iter().map(|s| s.probs.clone()).collect();
    let lu = action_bce_loss(&probs, &f.mask)?;
    agent.backward_episode(&tape, &dprobs)?;

    let group = traj.final_group().clone();
    let lp = classifier_sample(model, f, &group, k, rng)?;
    Ok((lp, lj, lu))
}

/// Loss curve as CSV, one row per epoch; missing validation values are empty.
pub fn write_loss_csv<W: std::io::Write>(log: &[EpochLog], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "epoch,steps,loss,loss_p,loss_j,loss_u,val_accuracy,val_loss,val_jaccard"
    )?;
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.8e}")).unwrap_or_default();
    for l in log {
        writeln!(
            out,
            "{},{},{:.8e},{:.8e},{:.8e},{:.8e},{},{},{}",
            l.epoch,
            l.steps,
            l.loss,
            l.loss_p,
            l.loss_j,
            l.loss_u,
            opt(l.val_accuracy),
            opt(l.val_loss),
            opt(l.val_jaccard)
        )?;
    }
    Ok(())
}
