use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wilink::agent::LinkGroup;
use wilink::harness::*;
use wilink::nn::Tensor;
use wilink::preprocess::DwtImage;
use wilink::sim::{build_environment, Activity, Environment, EnvironmentConfig, Split};

fn env() -> Environment {
    build_environment(EnvironmentConfig::default()).unwrap()
}

/// Random inputs with the shapes real features have; enough to exercise the
/// training and evaluation plumbing without synthesising CSI.
fn fake_features(n: usize, split: Split, seed: u64) -> Vec<SampleFeatures> {
    let spec = FeatureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let activity = Activity::ALL[i % 5];
            let images = (0..4)
                .map(|_| DwtImage {
                    side: spec.image_side,
                    data: (0..2 * spec.image_side * spec.image_side)
                        .map(|_| rng.gen_range(0.0..1.0))
                        .collect(),
                })
                .collect();
            let windows = (0..5)
                .map(|_| {
                    Tensor::from_vec(
                        &[8, spec.window_len],
                        (0..8 * spec.window_len)
                            .map(|_| rng.gen_range(-1.0..1.0))
                            .collect(),
                    )
                })
                .collect();
            SampleFeatures {
                split,
                index: i,
                activity,
                location: 1 + (i / 5) % 16,
                mask: vec![i % 2 == 0, true, false, i % 3 == 0],
                windows,
                images,
                degenerate_streams: 0,
            }
        })
        .collect()
}

fn balanced(n_per_cell: usize) -> (Vec<usize>, Vec<usize>) {
    let mut labels = Vec::new();
    let mut locations = Vec::new();
    for loc in 1..=16 {
        for c in 0..5 {
            for _ in 0..n_per_cell {
                labels.push(c);
                locations.push(loc);
            }
        }
    }
    (labels, locations)
}

#[test]
fn perfect_predictions_score_one_everywhere() {
    let (labels, locations) = balanced(10);
    let n = labels.len();
    let groups = vec![LinkGroup::all(4); n];
    let masks = vec![vec![true; 4]; n];
    let m = metrics(&labels, &labels, &locations, &groups, &masks).unwrap();
    assert_eq!(m.accuracy, 1.0);
    assert!(m.per_location_accuracy.iter().all(|a| *a == Some(1.0)));
    assert_eq!(m.per_location_accuracy.len(), 16);
    assert_eq!(m.mean_links, 4.0);
    assert_eq!(m.mean_jaccard, 1.0);
    for (c, row) in m.confusion.iter().enumerate() {
        assert_eq!(row[c], 160);
    }
}

#[test]
fn shuffled_labels_score_near_chance() {
    let (labels, locations) = balanced(10);
    let n = labels.len();
    let mut preds = labels.clone();
    preds.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
    let groups: Vec<LinkGroup> = (0..n).map(|i| LinkGroup::single(4, i % 4)).collect();
    let masks = vec![vec![true, false, false, false]; n];
    let m = metrics(&preds, &labels, &locations, &groups, &masks).unwrap();
    assert!((m.accuracy - 0.2).abs() < 0.05, "{}", m.accuracy);
    let trace: usize = (0..5).map(|c| m.confusion[c][c]).sum();
    let total: usize = m.confusion.iter().flatten().sum();
    assert_eq!(total, n);
    assert!((trace as f64 / total as f64 - m.accuracy).abs() < 1e-12);
    for row in &m.confusion {
        assert_eq!(row.iter().sum::<usize>(), 160);
    }
    assert_eq!(m.mean_links, 1.0);
    assert!((m.mean_jaccard - 0.25).abs() < 1e-12);
}

#[test]
fn metrics_reject_bad_inputs() {
    let g = vec![LinkGroup::all(4)];
    let mask = vec![vec![true; 4]];
    assert!(metrics(&[0, 1], &[0], &[1], &g, &mask).is_err());
    assert!(metrics(&[5], &[0], &[1], &g, &mask).is_err());
    assert!(metrics(&[0], &[0], &[17], &g, &mask).is_err());
    assert!(metrics(&[], &[], &[], &[], &[]).is_err());
}

#[test]
fn one_epoch_takes_ceil_n_over_batch_steps_and_is_reproducible() {
    let env = env();
    let train_set = fake_features(1949, Split::Train, 1);
    let spec = CaseSpec::new(3, 1).unwrap();
    let opts = TrainOptions {
        epochs: Some(1),
        seed: 5,
        holdout_every: 0,
        ..Default::default()
    };
    let a = train(&train_set, &env, spec, FeatureSpec::default(), &opts).unwrap();
    assert_eq!(a.log.len(), 1);
    assert_eq!(a.log[0].steps, 16);
    assert_eq!(a.best_epoch, 1);
    assert!(a.failure.is_none());
    let b = train(&train_set, &env, spec, FeatureSpec::default(), &opts).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let ha = a.model.save(&dir.path().join("a")).unwrap();
    let hb = b.model.save(&dir.path().join("b")).unwrap();
    assert_eq!(ha, hb);
    let mut csv = Vec::new();
    write_loss_csv(&a.log, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with(
        "epoch,steps,loss,loss_p,loss_j,loss_u,val_accuracy,val_loss,val_jaccard\n1,16,"
    ));
}

#[test]
fn agent_case_trains_and_reports_steps() {
    let env = env();
    let train_set = fake_features(40, Split::Train, 2);
    let test_set = fake_features(20, Split::Test, 3);
    let spec = CaseSpec::new(1, 1).unwrap();
    let opts = TrainOptions {
        epochs: Some(2),
        seed: 1,
        holdout_every: 4,
        ..Default::default()
    };
    let out = train(&train_set, &env, spec, FeatureSpec::default(), &opts).unwrap();
    assert!(out
        .log
        .iter()
        .all(|l| l.val_loss.is_some() && l.loss_u > 0.0));
    let r = evaluate(&out.model, &env, &test_set, 0).unwrap();
    assert!(r.mean_decision_steps >= 1.0 && r.mean_decision_steps <= 5.0);
    assert!(r.metrics.mean_links >= 1.0 && r.metrics.mean_links <= 4.0);
}

#[test]
fn random_link_reports_are_deterministic() {
    let env = env();
    let test_set = fake_features(80, Split::Test, 4);
    let model = Model::new(CaseSpec::new(4, 2).unwrap(), FeatureSpec::default(), 4, 9).unwrap();
    let a = evaluate(&model, &env, &test_set, 17).unwrap();
    let b = evaluate(&model, &env, &test_set, 17).unwrap();
    assert_eq!(
        serde_json::to_vec(&a).unwrap(),
        serde_json::to_vec(&b).unwrap()
    );
    assert_eq!(a.metrics.mean_links, 1.0);
    assert_eq!(a.mean_decision_steps, 0.0);
    let picks: Vec<usize> = test_set
        .iter()
        .map(|f| {
            predict(&model, &env, f, 17)
                .unwrap()
                .group
                .links()
                .next()
                .unwrap()
        })
        .collect();
    assert!((0..4).all(|l| picks.contains(&l)));
}

#[test]
fn orthogonal_pair_uses_two_links() {
    let env = env();
    let test_set = fake_features(80, Split::Test, 5);
    let model = Model::new(CaseSpec::new(2, 1).unwrap(), FeatureSpec::default(), 4, 9).unwrap();
    let r = evaluate(&model, &env, &test_set, 0).unwrap();
    assert_eq!(r.metrics.mean_links, 2.0);
}

#[test]
fn classifying_every_link_costs_more_than_one() {
    let env = env();
    let test_set = fake_features(60, Split::Test, 6);
    let all = Model::new(CaseSpec::new(3, 3).unwrap(), FeatureSpec::default(), 4, 1).unwrap();
    let one = Model::new(CaseSpec::new(4, 3).unwrap(), FeatureSpec::default(), 4, 1).unwrap();
    let ra = bench(&all, &env, &test_set, 0).unwrap();
    let r1 = bench(&one, &env, &test_set, 0).unwrap();
    assert_eq!(ra.samples, 60 - WARMUP_SAMPLES);
    assert!(ra.decision_ms.is_none());
    assert!(
        ra.classification_ms > r1.classification_ms,
        "{} vs {}",
        ra.classification_ms,
        r1.classification_ms
    );
    let agent = Model::new(CaseSpec::new(1, 1).unwrap(), FeatureSpec::default(), 4, 1).unwrap();
    assert!(
        bench(&agent, &env, &test_set, 0)
            .unwrap()
            .decision_ms
            .unwrap()
            > 0.0
    );
    assert!(bench(&one, &env, &test_set[..WARMUP_SAMPLES], 0).is_err());
}

#[test]
fn gradient_suite_passes() {
    let lines = gradcheck_suite(7).unwrap();
    assert!(lines.len() >= 17);
    for l in &lines {
        assert!(
            l.passed,
            "{}: {:.3e} at {}",
            l.name, l.max_rel_error, l.worst
        );
    }
}

#[test]
fn gradient_suite_catches_a_wrong_backward_pass() {
    let mut cases = gradcheck_cases(7).unwrap();
    let c = cases.iter_mut().find(|c| c.name == "lstm").unwrap();
    c.net.layers[0].fault_negate_grads = true;
    let line = run_gradcheck_case(c, 7).unwrap();
    assert!(!line.passed);
    assert!(line.worst.contains("lstm"), "{}", line.worst);
}

#[test]
fn config_overrides_defaults() {
    let cfg = parse_gen_config(
        "# small\nnum_subcarriers = 10\ntrain = 12\ntest = 80\nnoise_floor = 0.002\n",
    )
    .unwrap();
    assert_eq!(cfg.env.num_subcarriers, 10);
    assert_eq!((cfg.train, cfg.test), (12, 80));
    assert_eq!(cfg.env.noise_floor, 0.002);
    assert_eq!(parse_gen_config("").unwrap(), GenConfig::default());
    assert!(parse_gen_config("bogus = 1").is_err());
    assert!(parse_gen_config("train = 1\ntrain = 2").is_err());
    assert!(parse_gen_config("train").is_err());
}

#[test]
fn dataset_directory_roundtrip() {
    let cfg = parse_gen_config("train = 10\ntest = 80\nsample_duration = 1.5").unwrap();
    let env = build_environment(cfg.env.clone()).unwrap();
    let ds = wilink::sim::generate_dataset(&env, &cfg.dataset_spec(3)).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    write_dataset_dir(&a, &env, &ds, true).unwrap();
    write_dataset_dir(&b, &env, &ds, false).unwrap();
    assert_eq!(dataset_hash(&a).unwrap(), dataset_hash(&b).unwrap());
    let dir = DatasetDir::open(&a).unwrap();
    assert_eq!(dir.dataset.train, ds.train);
    let fs = dir.features(FeatureSpec::default(), true, false).unwrap();
    assert_eq!(fs.train.len(), 10);
    assert!(fs.test.is_empty());
    assert_eq!(fs.train[0].images.len(), 4);
}
