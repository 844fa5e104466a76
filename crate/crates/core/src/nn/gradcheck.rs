use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Mode, Network, NnError, Tensor};

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-12)`.
    pub max_rel_error: f64,
    /// Tensor entry where the largest error occurred, e.g. `"c.0.conv2d.weight[17]"`.
    pub worst: String,
    /// Analytic and numeric values at `worst`.
    pub worst_values: (f64, f64),
    pub checked: usize,
}

pub const GRADCHECK_STEP: f64 = 1e-5;

struct Probe {
    weights: Vec<Vec<f64>>,
    dropout_seed: u64,
}

impl Probe {
    /// Loss `sum_t w_t . y_t` with dropout masks fixed by `dropout_seed`.
    fn loss(&self, net: &Network<f64>, inputs: &[Tensor<f64>]) -> Result<f64, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.dropout_seed);
        let mut state = net.zero_state();
        let mut total = 0.0;
        for (x, w) in inputs.iter().zip(&self.weights) {
            let (y, _) = net.forward_step(x, &mut state, Mode::Train(&mut rng))?;
            total += y.data.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(total)
    }

    fn analytic(
        &self,
        net: &mut Network<f64>,
        inputs: &[Tensor<f64>],
    ) -> Result<Vec<Tensor<f64>>, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.dropout_seed);
        let mut state = net.zero_state();
        let mut tapes = Vec::with_capacity(inputs.len());
        for x in inputs {
            tapes.push(net.forward_step(x, &mut state, Mode::Train(&mut rng))?.1);
        }
        let out_shape = net.output_shape().to_vec();
        let dys: Vec<Tensor<f64>> = self
            .weights
            .iter()
            .map(|w| Tensor::from_vec(&out_shape, w.clone()))
            .collect();
        net.zero_grad();
        net.backward_through_time(&tapes, &dys)
    }
}

/// Entries whose gradient magnitude sits below this are compared on an
/// absolute scale; central differences cannot resolve them any better.
const REL_ERROR_FLOOR: f64 = 1e-7;

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_ERROR_FLOOR)
}

fn pick(rng: &mut ChaCha8Rng, len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        (0..len).collect()
    } else {
        let mut idx = sample(rng, len, max).into_vec();
        idx.sort_unstable();
        idx
    }
}

/// Compares backpropagated gradients of a random linear probe of the outputs
/// (summed over the input sequence) with central differences.
///
/// At most `max_entries` entries of each parameter tensor, and of each input
/// step, are checked; they are drawn from `seed`.
pub fn grad_check(
    net: &mut Network<f64>,
    inputs: &[Tensor<f64>],
    seed: u64,
    max_entries: usize,
) -> Result<GradCheckReport, NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out_len: usize = net.output_shape().iter().product();
    let probe = Probe {
        weights: inputs
            .iter()
            .map(|_| (0..out_len).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect(),
        dropout_seed: rng.gen(),
    };
    let dx = probe.analytic(net, inputs)?;
    let analytic: Vec<Vec<f64>> = net.params().map(|p| p.grad.clone()).collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        worst_values: (0.0, 0.0),
        checked: 0,
    };
    let mut record = |name: String, a: f64, n: f64| {
        let e = rel_error(a, n);
        report.checked += 1;
        if e > report.max_rel_error || report.worst.is_empty() {
            report.max_rel_error = e;
            report.worst = name;
            report.worst_values = (a, n);
        }
    };

    let h = GRADCHECK_STEP;
    let mut pi = 0;
    for li in 0..net.layers.len() {
        for k in 0..net.layers[li].params.len() {
            let len = net.layers[li].params[k].len();
            for i in pick(&mut rng, len, max_entries) {
                let orig = net.layers[li].params[k].value[i];
                net.layers[li].params[k].value[i] = orig + h;
                let up = probe.loss(net, inputs)?;
                net.layers[li].params[k].value[i] = orig - h;
                let down = probe.loss(net, inputs)?;
                net.layers[li].params[k].value[i] = orig;
                let numeric = (up - down) / (2.0 * h);
                record(
                    format!("{}[{i}]", net.layers[li].params[k].name),
                    analytic[pi][i],
                    numeric,
                );
            }
            pi += 1;
        }
    }

    let mut perturbed = inputs.to_vec();
    for t in 0..inputs.len() {
        for i in pick(&mut rng, inputs[t].len(), max_entries) {
            let orig = inputs[t].data[i];
            perturbed[t].data[i] = orig + h;
            let up = probe.loss(net, &perturbed)?;
            perturbed[t].data[i] = orig - h;
            let down = probe.loss(net, &perturbed)?;
            perturbed[t].data[i] = orig;
            record(
                format!("input[{t}][{i}]"),
                dx[t].data[i],
                (up - down) / (2.0 * h),
            );
        }
    }
    net.zero_grad();
    Ok(report)
}

/// [`grad_check`] turned into an error when `threshold` is exceeded.
pub fn require_grad_check(
    net: &mut Network<f64>,
    inputs: &[Tensor<f64>],
    seed: u64,
    max_entries: usize,
    threshold: f64,
) -> Result<GradCheckReport, NnError> {
    let report = grad_check(net, inputs, seed, max_entries)?;
    if report.max_rel_error.is_nan() || report.max_rel_error >= threshold {
        return Err(NnError::GradCheckFailed {
            worst: report.worst,
            error: report.max_rel_error,
        });
    }
    Ok(report)
}
