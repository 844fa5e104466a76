use serde::{Deserialize, Serialize};

use super::layer::Param;
use super::{NnError, Scalar};

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Weight of the REINFORCE term inside the agent loss.
    pub lambda1: f64,
    /// Weight of the agent loss inside the overall loss.
    pub lambda2: f64,
    /// Discount rate of the returns.
    pub discount: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epsilon: f64,
    pub epochs: usize,
}

impl HyperParams {
    /// Joint agent + classifier training (agent-driven cases).
    ///
    /// At 1e-4 the agent barely moves off chance within 30 epochs.
    pub fn joint() -> Self {
        HyperParams {
            lambda1: 0.1,
            lambda2: 0.1,
            discount: 0.9,
            learning_rate: 1e-3,
            batch_size: 128,
            epsilon: 1e-8,
            epochs: 30,
        }
    }

    /// Classifier-only training on a fixed link policy.
    pub fn supervised() -> Self {
        HyperParams {
            learning_rate: 1e-3,
            epochs: 200,
            ..Self::joint()
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |what: &str| Err(NnError::Hyper(what.to_string()));
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1]");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.lambda1 >= 0.0) || !(self.lambda2 >= 0.0) {
            return bad("loss weights must be non-negative");
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub steps: u64,
}

impl Adam {
    pub fn new(learning_rate: f64, epsilon: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon,
            steps: 0,
        }
    }

    /// Applies one update to every parameter and clears the gradients.
    ///
    /// Non-finite gradients abort the step before anything is modified.
    pub fn step<'a, T: Scalar>(
        &mut self,
        params: impl IntoIterator<Item = &'a mut Param<T>>,
    ) -> Result<(), NnError> {
        let mut params: Vec<&mut Param<T>> = params.into_iter().collect();
        for p in &params {
            if let Some(i) = p.grad.iter().position(|g| !g.is_finite()) {
                return Err(NnError::NonFinite {
                    what: format!("gradient {}[{i}] = {}", p.name, p.grad[i]),
                });
            }
        }
        self.steps += 1;
        let t = self.steps as i32;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let c1 = T::of(1.0 - self.beta1.powi(t));
        let c2 = T::of(1.0 - self.beta2.powi(t));
        let lr = T::of(self.learning_rate);
        let eps = T::of(self.epsilon);
        for p in params.iter_mut() {
            let Param {
                value,
                grad,
                m,
                v,
                name,
                ..
            } = &mut **p;
            for i in 0..value.len() {
                let g = grad[i];
                m[i] = b1 * m[i] + (T::one() - b1) * g;
                v[i] = b2 * v[i] + (T::one() - b2) * g * g;
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                value[i] = value[i] - lr * mhat / (vhat.sqrt() + eps);
                grad[i] = T::zero();
            }
            if let Some(i) = value.iter().position(|x| !x.is_finite()) {
                return Err(NnError::NonFinite {
                    what: format!("parameter {name}[{i}] after update"),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{build_network, Arch};

    fn head() -> crate::nn::Network<f64> {
        build_network(Arch::PolicyHead { links: 2 }, &[3], "p", 5).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = head();
        let before: Vec<_> = net.params().map(|p| p.value.clone()).collect();
        Adam::new(1e-3, 1e-8).step(net.params_mut()).unwrap();
        let after: Vec<_> = net.params().map(|p| p.value.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn first_step_moves_by_learning_rate_times_sign() {
        let mut net = head();
        let before = net.layers[0].params[0].value.clone();
        let grads = [3.0, -0.5, 1e-3, -7.0, 2.0, 0.1];
        net.layers[0].params[0].grad.copy_from_slice(&grads);
        Adam::new(1e-3, 1e-8).step(net.params_mut()).unwrap();
        let p = &net.layers[0].params[0];
        for i in 0..6 {
            let delta = p.value[i] - before[i];
            assert!((delta + 1e-3 * grads[i].signum()).abs() < 1e-8, "{delta}");
            assert_eq!(p.grad[i], 0.0);
        }
    }

    #[test]
    fn moments_make_steps_stateful() {
        let mut a = head();
        let mut b = head();
        let mut opt_a = Adam::new(1e-2, 1e-8);
        let mut opt_b = Adam::new(1e-2, 1e-8);
        for _ in 0..2 {
            a.layers[0].params[0].grad.iter_mut().for_each(|g| *g = 1.0);
            opt_a.step(a.params_mut()).unwrap();
        }
        b.layers[0].params[0].grad.iter_mut().for_each(|g| *g = 2.0);
        opt_b.step(b.params_mut()).unwrap();
        assert_ne!(a.layers[0].params[0].m, b.layers[0].params[0].m);
        assert_ne!(a.layers[0].params[0].value, b.layers[0].params[0].value);
    }

    #[test]
    fn nan_gradient_aborts_untouched() {
        let mut net = head();
        let before: Vec<_> = net.params().map(|p| p.value.clone()).collect();
        net.layers[0].params[1].grad[1] = f64::NAN;
        let err = Adam::new(1e-3, 1e-8).step(net.params_mut()).unwrap_err();
        assert!(err.to_string().contains("p.0.dense.bias"));
        let after: Vec<_> = net.params().map(|p| p.value.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn defaults() {
        let j = HyperParams::joint();
        assert_eq!(
            (
                j.lambda1,
                j.lambda2,
                j.discount,
                j.learning_rate,
                j.batch_size,
                j.epsilon
            ),
            (0.1, 0.1, 0.9, 1e-3, 128, 1e-8)
        );
        let s = HyperParams::supervised();
        assert_eq!((s.learning_rate, s.batch_size, s.epochs), (1e-3, 128, 200));
        assert!(HyperParams { discount: 1.5, ..j }.validate().is_err());
    }
}
