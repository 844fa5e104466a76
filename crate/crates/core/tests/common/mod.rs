#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wilink::agent::{log_prob_grad, select_action, PolicyVariant, SelectMode};
use wilink::nn::{build_network, Adam, Arch, Mode, Tensor};

/// Two-link, one-step bandit: including link 0 earns +1, including link 1
/// costs 1. Trains a sigmoid policy head with plain REINFORCE and returns
/// `P(link 0)` and `P(link 1)` before training and after every update.
/// The input is small so both links start near 0.5.
pub fn bandit_run(seed: u64, updates: usize, episodes: usize, lr: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net =
        build_network::<f64>(Arch::PolicyHead { links: 2 }, &[8], "policy", seed).unwrap();
    let h = Tensor::from_vec(&[8], (0..8).map(|_| rng.gen_range(-0.05..0.05)).collect());
    let mut opt = Adam::new(lr, 1e-8);
    let mut history = Vec::with_capacity(updates + 1);
    let (p, _) = net.forward(&h, Mode::Eval).unwrap();
    history.push((p.data[0], p.data[1]));
    for _ in 0..updates {
        for _ in 0..episodes {
            let (probs, tape) = net.forward(&h, Mode::Train(&mut rng)).unwrap();
            let group = select_action(
                &probs.data,
                SelectMode::Sample,
                PolicyVariant::Subset,
                Some(&mut rng),
            );
            let g = f64::from(u8::from(group.mask[0])) - f64::from(u8::from(group.mask[1]));
            let dlogp = log_prob_grad(&probs.data, &group.mask, PolicyVariant::Subset);
            let dy: Vec<f64> = dlogp.iter().map(|d| -g * d / episodes as f64).collect();
            net.backward(&tape, &Tensor::from_vec(&[2], dy)).unwrap();
        }
        opt.step(net.params_mut()).unwrap();
        let (p, _) = net.forward(&h, Mode::Eval).unwrap();
        history.push((p.data[0], p.data[1]));
    }
    history
}

/// Number of updates until `P(link 0) > 0.9` and `P(link 1) < 0.1`, if
/// reached.
pub fn bandit_updates_to_converge(seed: u64) -> Option<usize> {
    bandit_run(seed, 500, 8, 0.01)
        .iter()
        .position(|&(good, bad)| good > 0.9 && bad < 0.1)
}
