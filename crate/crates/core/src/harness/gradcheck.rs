use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{build_network, grad_check, Activation, Arch, LayerSpec, Network, Tensor};
use crate::Result;

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// One network to check, with its input sequence.
pub struct GradCheckCase {
    pub name: String,
    pub net: Network<f64>,
    pub inputs: Vec<Tensor<f64>>,
    pub max_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckLine {
    pub name: String,
    pub max_rel_error: f64,
    pub worst: String,
    pub checked: usize,
    pub passed: bool,
}

fn case(
    name: &str,
    net: Network<f64>,
    steps: usize,
    max_entries: usize,
    rng: &mut ChaCha8Rng,
) -> GradCheckCase {
    let n: usize = net.input_shape.iter().product();
    let inputs = (0..steps)
        .map(|_| {
            Tensor::from_vec(
                &net.input_shape,
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
        })
        .collect();
    GradCheckCase {
        name: name.to_string(),
        net,
        inputs,
        max_entries,
    }
}

/// Every layer kind and every architecture at reduced input sizes.
pub fn gradcheck_cases(seed: u64) -> Result<Vec<GradCheckCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let single = |spec: LayerSpec, input: &[usize], rng: &mut ChaCha8Rng| {
        Network::from_specs(&[spec], input, "g", rng.gen())
    };
    let conv1 = LayerSpec::Conv1d {
        filters: 3,
        kernel: 5,
        stride: 2,
        activation: Activation::Relu,
    };
    out.push(case(
        "conv1d",
        single(conv1, &[2, 13], &mut rng)?,
        1,
        1000,
        &mut rng,
    ));
    let conv2 = LayerSpec::Conv2d {
        filters: 3,
        kernel: 3,
        stride: 2,
        activation: Activation::Relu,
    };
    out.push(case(
        "conv2d",
        single(conv2, &[2, 7, 6], &mut rng)?,
        1,
        1000,
        &mut rng,
    ));
    out.push(case(
        "maxpool1d",
        single(
            LayerSpec::MaxPool1d { size: 2, stride: 2 },
            &[3, 9],
            &mut rng,
        )?,
        1,
        1000,
        &mut rng,
    ));
    out.push(case(
        "maxpool2d",
        single(
            LayerSpec::MaxPool2d { size: 2, stride: 2 },
            &[2, 5, 4],
            &mut rng,
        )?,
        1,
        1000,
        &mut rng,
    ));
    for (label, act) in [
        ("dense-relu", Activation::Relu),
        ("dense-tanh", Activation::Tanh),
        ("dense-sigmoid", Activation::Sigmoid),
        ("dense-softmax", Activation::Softmax),
    ] {
        out.push(case(
            label,
            single(
                LayerSpec::Dense {
                    units: 4,
                    activation: act,
                },
                &[6],
                &mut rng,
            )?,
            1,
            1000,
            &mut rng,
        ));
    }
    let dropout = [
        LayerSpec::Dense {
            units: 8,
            activation: Activation::Tanh,
        },
        LayerSpec::Dropout { rate: 0.4 },
    ];
    out.push(case(
        "dropout",
        Network::from_specs(&dropout, &[5], "g", rng.gen())?,
        1,
        1000,
        &mut rng,
    ));
    let lstm = [LayerSpec::Lstm { units: 5 }, LayerSpec::Lstm { units: 4 }];
    out.push(case(
        "lstm",
        Network::from_specs(&lstm, &[3], "g", rng.gen())?,
        4,
        1000,
        &mut rng,
    ));

    out.push(case(
        "mixed-cnn-lstm",
        build_network(Arch::MixedCnnLstm, &[4, 24], "agent", rng.gen())?,
        3,
        25,
        &mut rng,
    ));
    for (arch, side) in [
        (Arch::Cnn1, 8),
        (Arch::Cnn2, 12),
        (Arch::Cnn3, 16),
        (Arch::Cnn4, 16),
    ] {
        let net = build_network(arch, &[2, side, side], "classifier", rng.gen())?;
        out.push(case(&arch.name(), net, 1, 40, &mut rng));
    }
    for arch in [
        Arch::PolicyHead { links: 4 },
        Arch::PolicyHeadSoftmax { links: 4 },
    ] {
        let net = build_network(arch, &[16], "policy", rng.gen())?;
        out.push(case(&arch.name(), net, 1, 1000, &mut rng));
    }
    Ok(out)
}

pub fn run_gradcheck_case(c: &mut GradCheckCase, seed: u64) -> Result<GradCheckLine> {
    let r = grad_check(&mut c.net, &c.inputs, seed, c.max_entries)?;
    Ok(GradCheckLine {
        name: c.name.clone(),
        max_rel_error: r.max_rel_error,
        worst: r.worst,
        checked: r.checked,
        passed: r.max_rel_error < GRADCHECK_TOLERANCE,
    })
}

/// Checks every case; the caller decides what a failure means.
pub fn gradcheck_suite(seed: u64) -> Result<Vec<GradCheckLine>> {
    gradcheck_cases(seed)?
        .iter_mut()
        .map(|c| run_gradcheck_case(c, seed))
        .collect()
}
