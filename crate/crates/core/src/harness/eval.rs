use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cases::sample_rng;
use super::features::SampleFeatures;
use super::model::Model;
use crate::agent::{run_episode, EpisodeMode, LinkGroup, ReturnKind};
use crate::classifier::predict_group;
use crate::sim::{Activity, Environment, EnvironmentConfig, NUM_LOCATIONS};
use crate::{Error, Result, NUM_CLASSES};

/// Outcome of classifying one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub distribution: Vec<f64>,
    pub group: LinkGroup,
    /// Agent decision steps (0 for fixed policies).
    pub steps: usize,
    /// Policy probabilities of every decision step.
    pub step_probs: Vec<Vec<f64>>,
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Deterministic prediction for one sample. `seed` drives the random
/// single-link case, per sample index.
pub fn predict(
    model: &Model,
    env: &Environment,
    f: &SampleFeatures,
    seed: u64,
) -> Result<Prediction> {
    match &model.agent {
        Some(agent) => {
            let per_link: Vec<Vec<f64>> = f
                .images
                .iter()
                .map(|img| model.classifier.predict_link(img))
                .collect::<std::result::Result<_, _>>()?;
            let mut classify = |g: &LinkGroup| Ok(predict_group(g, &per_link));
            let (traj, _) = run_episode(
                agent,
                &f.windows,
                f.label(),
                &mut classify,
                EpisodeMode::Greedy,
                model.spec.hyper.discount,
                ReturnKind::Backward,
            )?;
            let distribution = traj.final_distribution().to_vec();
            Ok(Prediction {
                class: argmax(&distribution),
                group: traj.final_group().clone(),
                steps: traj.len(),
                step_probs: traj.steps.iter().map(|s| s.probs.clone()).collect(),
                distribution,
            })
        }
        None => {
            let mut rng = sample_rng(seed, f.index);
            let group = model.spec.policy.fixed_group(env, f.location, &mut rng)?;
            let dists: Vec<Vec<f64>> = group
                .links()
                .map(|l| model.classifier.predict_link(&f.images[l]))
                .collect::<std::result::Result<_, _>>()?;
            let refs: Vec<&Vec<f64>> = dists.iter().collect();
            let distribution = crate::classifier::mean_distribution(&refs);
            Ok(Prediction {
                class: argmax(&distribution),
                group,
                steps: 0,
                step_probs: Vec::new(),
                distribution,
            })
        }
    }
}

/// Aggregate evaluation statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub samples: usize,
    pub accuracy: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Accuracy per location 1..=16; `None` where a location has no samples.
    pub per_location_accuracy: Vec<Option<f64>>,
    /// Mean selected links per `[location][activity]`.
    pub link_counts: Vec<Vec<Option<f64>>>,
    pub per_activity_links: Vec<Option<f64>>,
    pub mean_links: f64,
    /// Mean Jaccard index between selected groups and planted masks.
    pub mean_jaccard: f64,
}

/// Overall accuracy, confusion matrix, per-location accuracy and link-count
/// statistics from aligned per-sample vectors.
pub fn metrics(
    predictions: &[usize],
    labels: &[usize],
    locations: &[usize],
    groups: &[LinkGroup],
    masks: &[Vec<bool>],
) -> Result<Metrics> {
    let n = labels.len();
    if [
        predictions.len(),
        locations.len(),
        groups.len(),
        masks.len(),
    ]
    .iter()
    .any(|&m| m != n)
    {
        return Err(Error::Data("metrics inputs differ in length".into()));
    }
    if n == 0 {
        return Err(Error::Data("no samples to score".into()));
    }
    let mut confusion = vec![vec![0usize; NUM_CLASSES]; NUM_CLASSES];
    let mut loc_total = vec![0usize; NUM_LOCATIONS];
    let mut loc_correct = [0usize; NUM_LOCATIONS];
    let mut cell_links = vec![vec![(0usize, 0usize); NUM_CLASSES]; NUM_LOCATIONS];
    let mut act_links = [(0usize, 0usize); NUM_CLASSES];
    let mut jaccard = 0.0;
    for i in 0..n {
        let (y, p, loc) = (labels[i], predictions[i], locations[i]);
        if y >= NUM_CLASSES || p >= NUM_CLASSES || !(1..=NUM_LOCATIONS).contains(&loc) {
            return Err(Error::Data(format!(
                "sample {i}: label {y}, prediction {p} or location {loc} out of range"
            )));
        }
        confusion[y][p] += 1;
        loc_total[loc - 1] += 1;
        loc_correct[loc - 1] += usize::from(y == p);
        let size = groups[i].size();
        cell_links[loc - 1][y].0 += size;
        cell_links[loc - 1][y].1 += 1;
        act_links[y].0 += size;
        act_links[y].1 += 1;
        jaccard += groups[i].jaccard(&masks[i]);
    }
    let ratio = |(a, b): (usize, usize)| (b > 0).then(|| a as f64 / b as f64);
    let correct: usize = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
    Ok(Metrics {
        samples: n,
        accuracy: correct as f64 / n as f64,
        confusion,
        per_location_accuracy: loc_correct
            .iter()
            .zip(&loc_total)
            .map(|(&c, &t)| ratio((c, t)))
            .collect(),
        link_counts: cell_links
            .iter()
            .map(|row| row.iter().map(|&c| ratio(c)).collect())
            .collect(),
        per_activity_links: act_links.iter().map(|&c| ratio(c)).collect(),
        mean_links: groups.iter().map(LinkGroup::size).sum::<usize>() as f64 / n as f64,
        mean_jaccard: jaccard / n as f64,
    })
}

/// Evaluation report of one case on a test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub case: u8,
    pub cnn: usize,
    pub seed: u64,
    pub activities: Vec<String>,
    pub metrics: Metrics,
    pub mean_decision_steps: f64,
    pub model: super::model::ModelMeta,
    pub environment: EnvironmentConfig,
    /// Hashes of the evaluated files, when known.
    pub inputs: Option<ReportInputs>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportInputs {
    pub dataset_sha256: String,
    pub checkpoint_sha256: String,
}

/// Greedy evaluation of `model` over `test`, parallel across samples.
pub fn evaluate(
    model: &Model,
    env: &Environment,
    test: &[SampleFeatures],
    seed: u64,
) -> Result<Report> {
    let preds: Vec<Prediction> = test
        .par_iter()
        .map(|f| predict(model, env, f, seed))
        .collect::<Result<_>>()?;
    let labels: Vec<usize> = test.iter().map(SampleFeatures::label).collect();
    let locations: Vec<usize> = test.iter().map(|f| f.location).collect();
    let masks: Vec<Vec<bool>> = test.iter().map(|f| f.mask.clone()).collect();
    let classes: Vec<usize> = preds.iter().map(|p| p.class).collect();
    let groups: Vec<LinkGroup> = preds.iter().map(|p| p.group.clone()).collect();
    let metrics = metrics(&classes, &labels, &locations, &groups, &masks)?;
    Ok(Report {
        case: model.spec.case(),
        cnn: model.spec.cnn,
        seed,
        activities: Activity::ALL.iter().map(|a| a.name().to_string()).collect(),
        metrics,
        mean_decision_steps: preds.iter().map(|p| p.steps).sum::<usize>() as f64
            / preds.len().max(1) as f64,
        model: model.meta(),
        environment: env.config.clone(),
        inputs: None,
    })
}
