use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wilink::nn::*;

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f32> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
}

#[test]
fn checkpoint_roundtrip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let net = build_network::<f32>(Arch::Cnn2, &[2, 32, 32], "classifier", 5).unwrap();
    let meta = serde_json::json!({"note": "roundtrip"});
    save_checkpoint(dir.path(), meta.clone(), net.params()).unwrap();
    let (manifest, map) = load_checkpoint(dir.path()).unwrap();
    assert_eq!(manifest.format, CHECKPOINT_FORMAT);
    assert_eq!(manifest.meta, meta);
    assert!(manifest
        .tensors
        .iter()
        .all(|t| t.name.starts_with("classifier.")));

    let mut other = build_network::<f32>(Arch::Cnn2, &[2, 32, 32], "classifier", 6).unwrap();
    restore_params(&map, other.params_mut()).unwrap();
    for (a, b) in net.params().zip(other.params()) {
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.value), bits(&b.value), "{}", a.name);
    }
    let h1 = checkpoint_hash(dir.path()).unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    save_checkpoint(dir2.path(), meta, other.params()).unwrap();
    assert_eq!(h1, checkpoint_hash(dir2.path()).unwrap());
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let net = build_network::<f32>(Arch::Cnn1, &[2, 16, 16], "classifier", 1).unwrap();
    save_checkpoint(dir.path(), serde_json::Value::Null, net.params()).unwrap();
    let blob = dir.path().join(BLOB_FILE);
    let mut bytes = std::fs::read(&blob).unwrap();
    bytes.push(0);
    std::fs::write(&blob, &bytes).unwrap();
    assert!(matches!(
        load_checkpoint(dir.path()),
        Err(NnError::Checkpoint(_))
    ));
    bytes.truncate(bytes.len() - 9);
    std::fs::write(&blob, &bytes).unwrap();
    assert!(matches!(
        load_checkpoint(dir.path()),
        Err(NnError::Checkpoint(_))
    ));

    let dir = tempfile::tempdir().unwrap();
    save_checkpoint(dir.path(), serde_json::Value::Null, net.params()).unwrap();
    let (_, map) = load_checkpoint(dir.path()).unwrap();
    let mut bigger = build_network::<f32>(Arch::Cnn1, &[2, 32, 32], "classifier", 1).unwrap();
    assert!(restore_params(&map, bigger.params_mut()).is_err());
    let mut renamed = build_network::<f32>(Arch::Cnn1, &[2, 16, 16], "other", 1).unwrap();
    assert!(restore_params(&map, renamed.params_mut()).is_err());
}

#[test]
fn inverted_dropout_preserves_expectation() {
    let specs = [LayerSpec::Dropout { rate: 0.3 }];
    let net = Network::<f64>::from_specs(&specs, &[6], "d", 0).unwrap();
    let x = Tensor::from_vec(&[6], vec![1.0, -2.0, 0.5, 3.0, 0.0, -0.7]);
    let (eval, _) = net.forward(&x, Mode::Eval).unwrap();
    assert_eq!(eval.data, x.data);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 10_000;
    let mut sum = [0.0; 6];
    let mut sq = [0.0; 6];
    for _ in 0..draws {
        let (y, _) = net.forward(&x, Mode::Train(&mut rng)).unwrap();
        for i in 0..6 {
            sum[i] += y.data[i];
            sq[i] += y.data[i] * y.data[i];
        }
    }
    for i in 0..6 {
        let mean = sum[i] / draws as f64;
        let var = sq[i] / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        assert!(
            (mean - x.data[i]).abs() <= 3.0 * se + 1e-12,
            "entry {i}: {mean} vs {}",
            x.data[i]
        );
    }
}

#[test]
fn eval_forward_ignores_dropout_generator() {
    let net = build_network::<f32>(Arch::Cnn4, &[2, 32, 32], "classifier", 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random(&[2, 32, 32], &mut rng);
    let (a, tape) = net.forward(&x, Mode::Eval).unwrap();
    assert!(tape.is_empty());
    let _ = net.forward(&x, Mode::Train(&mut rng)).unwrap();
    let (b, _) = net.forward(&x, Mode::Eval).unwrap();
    assert_eq!(a, b);
    assert!((a.data.iter().sum::<f32>() - 1.0).abs() < 1e-6);
}

#[test]
fn saturating_logits_stay_finite() {
    for act in [Activation::Sigmoid, Activation::Softmax] {
        let net = Network::<f64>::from_specs(
            &[LayerSpec::Dense {
                units: 3,
                activation: act,
            }],
            &[2],
            "s",
            0,
        )
        .unwrap();
        for scale in [1e2, 1e3, 1e4] {
            let x = Tensor::from_vec(&[2], vec![scale, -scale]);
            let (y, _) = net.forward(&x, Mode::Eval).unwrap();
            assert!(
                y.data
                    .iter()
                    .all(|v| v.is_finite() && *v >= 0.0 && *v <= 1.0),
                "{act:?} at {scale}: {:?}",
                y.data
            );
        }
    }
}

#[test]
fn zero_upstream_gradient_gives_zero_parameter_gradients() {
    let mut net = build_network::<f32>(Arch::Cnn3, &[2, 32, 32], "classifier", 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(&[2, 32, 32], &mut rng);
    let (_, tape) = net.forward(&x, Mode::Train(&mut rng)).unwrap();
    net.backward(&tape, &Tensor::zeros(&[5])).unwrap();
    assert!(net.params().all(|p| p.grad.iter().all(|&g| g == 0.0)));
}

fn short_training_run(seed: u64) -> Vec<u32> {
    let mut net = build_network::<f32>(Arch::Cnn1, &[2, 16, 16], "classifier", seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut opt = Adam::new(1e-3, 1e-8);
    for _ in 0..5 {
        let x = random(&[2, 16, 16], &mut rng);
        let (y, tape) = net.forward(&x, Mode::Train(&mut rng)).unwrap();
        let mut dy = y.clone();
        dy.data[0] -= 1.0;
        net.backward(&tape, &dy).unwrap();
        opt.step(net.params_mut()).unwrap();
    }
    net.params()
        .flat_map(|p| p.value.iter().map(|v| v.to_bits()))
        .collect()
}

#[test]
fn training_is_bit_reproducible() {
    assert_eq!(short_training_run(4), short_training_run(4));
    assert_ne!(short_training_run(4), short_training_run(5));
}

#[test]
fn every_architecture_reaches_its_head_size() {
    for i in 1..=4 {
        let net = build_network::<f32>(Arch::cnn(i).unwrap(), &[2, 32, 32], "c", 0).unwrap();
        assert_eq!(net.output_shape(), &[5]);
    }
    let body = build_network::<f32>(Arch::MixedCnnLstm, &[8, 256], "a", 0).unwrap();
    assert_eq!(body.output_shape(), &[CONTEXT_UNITS]);
    let head =
        build_network::<f32>(Arch::PolicyHead { links: 4 }, &[CONTEXT_UNITS], "p", 0).unwrap();
    assert_eq!(head.output_shape(), &[4]);
    assert_eq!(
        build_network::<f32>(Arch::Cnn1, &[2, 32, 32], "c", 0)
            .unwrap()
            .layers
            .len(),
        5
    );
    let cnn4 = build_network::<f32>(Arch::Cnn4, &[2, 32, 32], "c", 0).unwrap();
    assert_eq!(cnn4.layers.len(), 15);
    assert_eq!(
        cnn4.layers[12].spec,
        LayerSpec::Dense {
            units: 400,
            activation: Activation::Relu
        }
    );
}

#[test]
fn widened_network_matches_narrow_one() {
    let net = build_network::<f32>(Arch::Cnn2, &[2, 16, 16], "c", 2).unwrap();
    let wide = widen(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random(&[2, 16, 16], &mut rng);
    let (a, _) = net.forward(&x, Mode::Eval).unwrap();
    let (b, _) = wide
        .forward(&Tensor::from_vec(&[2, 16, 16], x.to_f64()), Mode::Eval)
        .unwrap();
    for (u, v) in a.data.iter().zip(&b.data) {
        assert!((*u as f64 - v).abs() < 1e-5);
    }
}
