use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::cases::sample_rng;
use super::features::SampleFeatures;
use super::model::Model;
use crate::agent::{run_episode, EpisodeMode, LinkGroup, ReturnKind};
use crate::classifier::{mean_distribution, predict_group};
use crate::sim::Environment;
use crate::{Error, Result};

/// Samples excluded from timing while caches and allocators warm up.
pub const WARMUP_SAMPLES: usize = 10;

/// Mean per-sample wall times in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub case: u8,
    pub cnn: usize,
    pub samples: usize,
    /// Agent episode time; `None` for fixed link policies.
    pub decision_ms: Option<f64>,
    /// Classifier passes over the chosen links plus averaging.
    pub classification_ms: f64,
}

/// Times decision and classification separately, serially, over `test`
/// after skipping the first [`WARMUP_SAMPLES`].
pub fn bench(
    model: &Model,
    env: &Environment,
    test: &[SampleFeatures],
    seed: u64,
) -> Result<BenchReport> {
    if test.len() <= WARMUP_SAMPLES {
        return Err(Error::Data(format!(
            "bench needs more than {WARMUP_SAMPLES} test samples, got {}",
            test.len()
        )));
    }
    let mut decision = 0.0;
    let mut classification = 0.0;
    let mut timed = 0;
    for (i, f) in test.iter().enumerate() {
        let (group, d) = match &model.agent {
            Some(agent) => {
                // the agent's reward needs per-link predictions; they are
                // computed outside the timed region
                let per_link: Vec<Vec<f64>> = f
                    .images
                    .iter()
                    .map(|img| model.classifier.predict_link(img))
                    .collect::<std::result::Result<_, _>>()?;
                let mut classify = |g: &LinkGroup| Ok(predict_group(g, &per_link));
                let t0 = Instant::now();
                let (traj, _) = run_episode(
                    agent,
                    &f.windows,
                    f.label(),
                    &mut classify,
                    EpisodeMode::Greedy,
                    model.spec.hyper.discount,
                    ReturnKind::Backward,
                )?;
                let d = t0.elapsed().as_secs_f64();
                (traj.final_group().clone(), d)
            }
            None => {
                let mut rng = sample_rng(seed, f.index);
                (
                    model.spec.policy.fixed_group(env, f.location, &mut rng)?,
                    0.0,
                )
            }
        };
        let t0 = Instant::now();
        let dists: Vec<Vec<f64>> = group
            .links()
            .map(|l| model.classifier.predict_link(&f.images[l]))
            .collect::<std::result::Result<_, _>>()?;
        let refs: Vec<&Vec<f64>> = dists.iter().collect();
        std::hint::black_box(mean_distribution(&refs));
        let c = t0.elapsed().as_secs_f64();
        if i >= WARMUP_SAMPLES {
            decision += d;
            classification += c;
            timed += 1;
        }
    }
    let ms = |s: f64| 1e3 * s / timed as f64;
    Ok(BenchReport {
        case: model.spec.case(),
        cnn: model.spec.cnn,
        samples: timed,
        decision_ms: model.agent.is_some().then(|| ms(decision)),
        classification_ms: ms(classification),
    })
}
