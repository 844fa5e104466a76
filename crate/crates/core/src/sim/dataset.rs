use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{
    generate_sample, informative_links, mix_seed, Activity, ActivityProfile, CsiSample,
    Environment, EnvironmentConfig, Point, SimError, NUM_LOCATIONS,
};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Sample counts and master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub train: usize,
    /// Must be a multiple of 16 locations x 5 activities.
    pub test: usize,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            train: 1949,
            test: 800,
            seed: 2021,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

/// Everything needed to regenerate one sample bit-for-bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub split: Split,
    pub index: usize,
    pub activity: Activity,
    pub location: usize,
    pub seed: u64,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub activities: Vec<String>,
    pub locations: Vec<Point>,
    pub config: EnvironmentConfig,
    pub spec: DatasetSpec,
    pub train_count: usize,
    pub test_count: usize,
}

/// A generated dataset.
///
/// Samples are held as their generation recipes; [`Dataset::materialize`]
/// rebuilds the CSI tensor on demand, so a full-size dataset never has to sit
/// in memory at once.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<SampleMeta>,
    pub test: Vec<SampleMeta>,
    pub manifest: DatasetManifest,
}

fn cell(index: usize) -> (Activity, usize) {
    // one pass over all 16 locations per activity, activities cycled
    let activity = Activity::ALL[(index / NUM_LOCATIONS) % Activity::ALL.len()];
    (activity, index % NUM_LOCATIONS + 1)
}

pub fn generate_dataset(env: &Environment, spec: &DatasetSpec) -> Result<Dataset, SimError> {
    let cells = NUM_LOCATIONS * Activity::ALL.len();
    if spec.test == 0 || !spec.test.is_multiple_of(cells) {
        return Err(SimError::Spec(format!(
            "test count {} must be a positive multiple of {cells} (16 locations x 5 activities)",
            spec.test
        )));
    }
    let masks: Vec<Vec<Vec<bool>>> = Activity::ALL
        .iter()
        .map(|&a| {
            (1..=NUM_LOCATIONS)
                .map(|l| informative_links(env, l, &ActivityProfile::standard(a)))
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;

    let mut used = HashSet::new();
    let mut draw_seed = |tag: u64, index: usize| {
        let mut s = mix_seed(mix_seed(spec.seed) ^ (tag << 48) ^ index as u64);
        while !used.insert(s) {
            s = mix_seed(s);
        }
        s
    };
    let mut make = |split: Split, count: usize| {
        let tag = if split == Split::Train { 1 } else { 2 };
        (0..count)
            .map(|i| {
                let (activity, location) = cell(i);
                SampleMeta {
                    split,
                    index: i,
                    activity,
                    location,
                    seed: draw_seed(tag, i),
                    mask: masks[activity.id()][location - 1].clone(),
                }
            })
            .collect::<Vec<_>>()
    };
    let train = make(Split::Train, spec.train);
    let test = make(Split::Test, spec.test);

    Ok(Dataset {
        manifest: DatasetManifest {
            format_version: DATASET_FORMAT_VERSION,
            activities: Activity::ALL.iter().map(|a| a.name().to_string()).collect(),
            locations: env.locations.clone(),
            config: env.config.clone(),
            spec: *spec,
            train_count: train.len(),
            test_count: test.len(),
        },
        train,
        test,
    })
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[SampleMeta] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    pub fn materialize(&self, env: &Environment, meta: &SampleMeta) -> Result<CsiSample, SimError> {
        generate_sample(
            env,
            &ActivityProfile::standard(meta.activity),
            meta.location,
            meta.seed,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::build_environment;

    fn env() -> Environment {
        build_environment(EnvironmentConfig::default()).unwrap()
    }

    #[test]
    fn default_spec_mirrors_split_sizes() {
        let ds = generate_dataset(&env(), &DatasetSpec::default()).unwrap();
        assert_eq!(ds.train.len(), 1949);
        assert_eq!(ds.test.len(), 800);
        let mut per_loc = [0usize; 16];
        for m in &ds.test {
            per_loc[m.location - 1] += 1;
        }
        assert!(per_loc.iter().all(|&c| c == 50));
        let train: HashSet<u64> = ds.train.iter().map(|m| m.seed).collect();
        assert!(ds.test.iter().all(|m| !train.contains(&m.seed)));
    }

    #[test]
    fn one_per_cell_test_only() {
        let ds = generate_dataset(
            &env(),
            &DatasetSpec {
                train: 0,
                test: 80,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(ds.test.len(), 80);
        let cells: HashSet<(Activity, usize)> =
            ds.test.iter().map(|m| (m.activity, m.location)).collect();
        assert_eq!(cells.len(), 80);
    }

    #[test]
    fn unbalanced_test_count_is_rejected() {
        for test in [0, 79, 100] {
            let r = generate_dataset(
                &env(),
                &DatasetSpec {
                    train: 10,
                    test,
                    seed: 1,
                },
            );
            assert!(matches!(r, Err(SimError::Spec(_))));
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let e = env();
        let spec = DatasetSpec {
            train: 20,
            test: 80,
            seed: 5,
        };
        let a = generate_dataset(&e, &spec).unwrap();
        let b = generate_dataset(&e, &spec).unwrap();
        assert_eq!(a, b);
        let s1 = a.materialize(&e, &a.train[3]).unwrap();
        let s2 = b.materialize(&e, &b.train[3]).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.informative_mask, a.train[3].mask);
    }
}
