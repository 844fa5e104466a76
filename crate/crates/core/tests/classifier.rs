use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wilink::agent::LinkGroup;
use wilink::classifier::*;
use wilink::nn::{build_network, Arch, Mode, Tensor};
use wilink::preprocess::DwtImage;

fn random_image(side: usize, rng: &mut ChaCha8Rng) -> DwtImage {
    DwtImage {
        side,
        data: (0..2 * side * side)
            .map(|_| rng.gen_range(0.0f32..1.0))
            .collect(),
    }
}

fn distribution(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..5).map(|_| rng.gen_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

#[test]
fn link_predictions_are_pure_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for cnn in 1..=4 {
        let c = Classifier::new(cnn, 32, 7).unwrap();
        let img = random_image(32, &mut rng);
        let p = c.predict_link(&img).unwrap();
        assert_eq!(p.len(), 5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert_eq!(p, c.predict_link(&img).unwrap());
    }
    let c = Classifier::new(1, 32, 7).unwrap();
    assert!(c.predict_link(&random_image(16, &mut rng)).is_err());
    assert!(Classifier::new(5, 32, 7).is_err());
}

#[test]
fn group_examples() {
    let a = vec![1.0, 0.0, 0.0, 0.0, 0.0];
    let b = vec![0.0, 1.0, 0.0, 0.0, 0.0];
    let per_link = vec![a.clone(), b, vec![0.2; 5], vec![0.2; 5]];
    assert_eq!(
        predict_group(&LinkGroup::new(vec![true, true, false, false]), &per_link),
        vec![0.5, 0.5, 0.0, 0.0, 0.0]
    );
    assert_eq!(predict_group(&LinkGroup::single(4, 0), &per_link), a);
}

proptest! {
    #[test]
    fn group_mean_is_order_free_and_normalised(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds: Vec<Vec<f64>> = (0..4).map(|_| distribution(&mut rng)).collect();
        let fwd: Vec<&Vec<f64>> = ds.iter().collect();
        let rev: Vec<&Vec<f64>> = ds.iter().rev().collect();
        let a = mean_distribution(&fwd);
        let b = mean_distribution(&rev);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-15);
        }
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn soft_loss_matches_per_class_sum(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = distribution(&mut rng);
        let t = distribution(&mut rng);
        let mut expect = 0.0;
        for d in 0..5 {
            expect += t[d] * p[d].ln();
        }
        expect = -expect / 5.0;
        prop_assert!((classification_loss_soft(&p, &t).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn more_mass_on_truth_lowers_the_loss(seed in 0u64..1000, gt in 0usize..5, shift in 0.001f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = distribution(&mut rng);
        let mut q = p.clone();
        let other = (gt + 1) % 5;
        let moved = shift * q[other];
        q[other] -= moved;
        q[gt] += moved;
        let a = classification_loss(&p, gt).unwrap();
        let b = classification_loss(&q, gt).unwrap();
        prop_assert!(b < a);
        prop_assert!(b >= 0.0);
    }
}

#[test]
fn loss_examples() {
    let p = vec![0.2; 5];
    assert!((classification_loss(&p, 3).unwrap() - 0.2 * -(0.2f64.ln())).abs() < 1e-12);
    assert!((classification_loss(&p, 3).unwrap() - 0.3219).abs() < 1e-4);
    assert!(classification_loss(&p, 5).is_err());
    assert!(classification_loss(&[0.0, 1.0, 0.0, 0.0, 0.0], 1).unwrap() < 1e-7);
    assert!((overall_loss(0.3, 0.7, 0.1) - 0.37).abs() < 1e-12);
    assert_eq!(overall_loss(0.3, 0.7, 0.0), 0.3);
}

#[test]
fn classification_gradient_through_cnn1_matches_differences() {
    let mut net = build_network::<f64>(Arch::Cnn1, &[2, 16, 16], "classifier", 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = Tensor::from_vec(
        &[2, 16, 16],
        (0..512).map(|_| rng.gen_range(0.0..1.0)).collect(),
    );
    let gt = 2;
    let loss = |net: &wilink::nn::Network<f64>| {
        let mut drng = ChaCha8Rng::seed_from_u64(11);
        let (y, _) = net.forward(&x, Mode::Train(&mut drng)).unwrap();
        classification_loss(&y.data, gt).unwrap()
    };
    let mut drng = ChaCha8Rng::seed_from_u64(11);
    let (y, tape) = net.forward(&x, Mode::Train(&mut drng)).unwrap();
    let dp = classification_loss_grad(&y.data, gt);
    net.backward(&tape, &Tensor::from_vec(&[5], dp)).unwrap();
    let analytic: Vec<Vec<f64>> = net.params().map(|p| p.grad.clone()).collect();
    let h = 1e-5;
    let mut pi = 0;
    let mut worst: f64 = 0.0;
    for li in 0..net.layers.len() {
        for k in 0..net.layers[li].params.len() {
            let len = net.layers[li].params[k].len();
            for i in (0..len).step_by((len / 30).max(1)) {
                let orig = net.layers[li].params[k].value[i];
                net.layers[li].params[k].value[i] = orig + h;
                let up = loss(&net);
                net.layers[li].params[k].value[i] = orig - h;
                let down = loss(&net);
                net.layers[li].params[k].value[i] = orig;
                let n = (up - down) / (2.0 * h);
                let a = analytic[pi][i];
                worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-12));
            }
            pi += 1;
        }
    }
    assert!(worst < 1e-4, "max relative error {worst:.3e}");
}
