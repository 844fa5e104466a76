use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::{Activation, Cache, Layer, LayerSpec, LstmState, Param};
use super::{NnError, Scalar, Tensor};

/// Architectures used by the agent and the classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arch {
    /// Four strided 1-D convolutions, max pooling and three stacked LSTMs.
    MixedCnnLstm,
    Cnn1,
    Cnn2,
    Cnn3,
    Cnn4,
    /// Per-link inclusion probabilities (sigmoid).
    PolicyHead {
        links: usize,
    },
    /// Distribution over single links (softmax).
    PolicyHeadSoftmax {
        links: usize,
    },
}

/// Hidden size of the context LSTMs.
pub const CONTEXT_UNITS: usize = 128;

impl Arch {
    /// Classifier architecture by its 1-based depth index.
    pub fn cnn(index: usize) -> Option<Arch> {
        match index {
            1 => Some(Arch::Cnn1),
            2 => Some(Arch::Cnn2),
            3 => Some(Arch::Cnn3),
            4 => Some(Arch::Cnn4),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Arch::MixedCnnLstm => "mixed-cnn-lstm".into(),
            Arch::Cnn1 => "cnn1".into(),
            Arch::Cnn2 => "cnn2".into(),
            Arch::Cnn3 => "cnn3".into(),
            Arch::Cnn4 => "cnn4".into(),
            Arch::PolicyHead { links } => format!("policy-sigmoid-{links}"),
            Arch::PolicyHeadSoftmax { links } => format!("policy-softmax-{links}"),
        }
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        use Activation::*;
        use LayerSpec::*;
        let conv1 = |filters| Conv1d {
            filters,
            kernel: 20,
            stride: 2,
            activation: Relu,
        };
        let conv2 = |filters| Conv2d {
            filters,
            kernel: 5,
            stride: 2,
            activation: Relu,
        };
        let pool2 = MaxPool2d { size: 2, stride: 2 };
        let drop = |rate| Dropout { rate };
        let head = Dense {
            units: crate::NUM_CLASSES,
            activation: Softmax,
        };
        match *self {
            Arch::MixedCnnLstm => vec![
                conv1(8),
                conv1(16),
                conv1(32),
                conv1(64),
                MaxPool1d { size: 2, stride: 2 },
                Lstm {
                    units: CONTEXT_UNITS,
                },
                Lstm {
                    units: CONTEXT_UNITS,
                },
                Lstm {
                    units: CONTEXT_UNITS,
                },
            ],
            Arch::Cnn1 => vec![conv2(16), drop(0.3), pool2.clone(), drop(0.5), head],
            Arch::Cnn2 => vec![
                conv2(16),
                pool2.clone(),
                conv2(32),
                drop(0.3),
                pool2.clone(),
                drop(0.5),
                head,
            ],
            Arch::Cnn3 => vec![
                conv2(16),
                pool2.clone(),
                conv2(32),
                drop(0.3),
                pool2.clone(),
                conv2(64),
                drop(0.3),
                pool2.clone(),
                drop(0.5),
                head,
            ],
            Arch::Cnn4 => vec![
                conv2(16),
                pool2.clone(),
                conv2(32),
                drop(0.3),
                pool2.clone(),
                conv2(64),
                drop(0.3),
                pool2.clone(),
                conv2(64),
                drop(0.3),
                pool2.clone(),
                drop(0.5),
                Dense {
                    units: 400,
                    activation: Relu,
                },
                drop(0.5),
                head,
            ],
            Arch::PolicyHead { links } => vec![Dense {
                units: links,
                activation: Sigmoid,
            }],
            Arch::PolicyHeadSoftmax { links } => vec![Dense {
                units: links,
                activation: Softmax,
            }],
        }
    }
}

/// Forward-pass mode. Training applies dropout from the given generator and
/// records the caches needed for the backward pass.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

/// Cached activations of one forward step; empty for evaluation passes.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    caches: Vec<Cache<T>>,
}

impl<T> Tape<T> {
    pub fn is_empty(&self) -> bool {
        self.caches.is_empty()
    }
}

/// Recurrent state of every LSTM layer of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetState<T> {
    pub lstm: Vec<Option<LstmState<T>>>,
}

impl<T: Scalar> NetState<T> {
    /// Hidden state of the last LSTM layer, if any.
    pub fn last_hidden(&self) -> Option<&[T]> {
        self.lstm
            .iter()
            .rev()
            .flatten()
            .next()
            .map(|s| s.h.as_slice())
    }
}

#[derive(Debug, Clone)]
pub struct Network<T> {
    /// `None` for networks assembled from an ad-hoc layer list.
    pub arch: Option<Arch>,
    pub input_shape: Vec<usize>,
    pub layers: Vec<Layer<T>>,
}

/// Builds `arch` for one-sample inputs of `input_shape`. Parameter names are
/// `"{prefix}.{layer index}.{kind}.weight|bias"`.
pub fn build_network<T: Scalar>(
    arch: Arch,
    input_shape: &[usize],
    prefix: &str,
    seed: u64,
) -> Result<Network<T>, NnError> {
    let mut net =
        Network::from_specs(&arch.layers(), input_shape, prefix, seed).map_err(|e| match e {
            NnError::Construction { trace, .. } => NnError::Construction {
                arch: arch.name(),
                trace,
            },
            other => other,
        })?;
    net.arch = Some(arch);
    Ok(net)
}

impl<T: Scalar> Network<T> {
    /// Network from an explicit layer list, named like [`build_network`].
    pub fn from_specs(
        specs: &[LayerSpec],
        input_shape: &[usize],
        prefix: &str,
        seed: u64,
    ) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shape = input_shape.to_vec();
        let mut trace = vec![format!("input {shape:?}")];
        let mut layers = Vec::new();
        for (i, spec) in specs.iter().cloned().enumerate() {
            let name = format!("{prefix}.{i}.{}", spec.kind());
            match Layer::new(spec.clone(), &shape, &name, &mut rng) {
                Ok(layer) => {
                    shape = layer.output_shape.clone();
                    trace.push(format!("{i} {} -> {shape:?}", spec.kind()));
                    layers.push(layer);
                }
                Err(reason) => {
                    trace.push(format!("{i} {}: {reason}", spec.kind()));
                    return Err(NnError::Construction {
                        arch: "custom".into(),
                        trace: trace.join("; "),
                    });
                }
            }
        }
        Ok(Network {
            arch: None,
            input_shape: input_shape.to_vec(),
            layers,
        })
    }

    pub fn output_shape(&self) -> &[usize] {
        self.layers
            .last()
            .map_or(&self.input_shape, |l| &l.output_shape)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &Param<T>> {
        self.layers.iter().flat_map(|l| l.params.iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.layers.iter_mut().flat_map(|l| l.params.iter_mut())
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().for_each(Param::zero_grad);
    }

    pub fn is_recurrent(&self) -> bool {
        self.layers.iter().any(Layer::is_recurrent)
    }

    pub fn zero_state(&self) -> NetState<T> {
        NetState {
            lstm: self.layers.iter().map(Layer::zero_state).collect(),
        }
    }

    /// One forward step through all layers.
    pub fn forward_step(
        &self,
        x: &Tensor<T>,
        state: &mut NetState<T>,
        mode: Mode<'_>,
    ) -> Result<(Tensor<T>, Tape<T>), NnError> {
        self.run(x, state, mode, self.layers.len())
    }

    /// Forward pass of a feed-forward network (recurrent layers start from zero).
    pub fn forward(&self, x: &Tensor<T>, mode: Mode<'_>) -> Result<(Tensor<T>, Tape<T>), NnError> {
        let mut state = self.zero_state();
        self.forward_step(x, &mut state, mode)
    }

    /// Evaluation output of the first `n` layers.
    pub fn forward_prefix(&self, x: &Tensor<T>, n: usize) -> Result<Tensor<T>, NnError> {
        let mut state = self.zero_state();
        Ok(self
            .run(x, &mut state, Mode::Eval, n.min(self.layers.len()))?
            .0)
    }

    fn run(
        &self,
        x: &Tensor<T>,
        state: &mut NetState<T>,
        mode: Mode<'_>,
        n: usize,
    ) -> Result<(Tensor<T>, Tape<T>), NnError> {
        let expected: usize = self.input_shape.iter().product();
        if x.data.len() != expected {
            return Err(NnError::Shape {
                layer: 0,
                expected: self.input_shape.clone(),
                got: x.shape.clone(),
            });
        }
        let mut rng = match mode {
            Mode::Eval => None,
            Mode::Train(rng) => Some(rng),
        };
        let mut caches = Vec::new();
        let mut cur = x.data.clone();
        for (i, layer) in self.layers[..n].iter().enumerate() {
            let st = state.lstm.get_mut(i).and_then(Option::as_mut);
            if layer.is_recurrent() && st.is_none() {
                return Err(NnError::Shape {
                    layer: i,
                    expected: vec![],
                    got: vec![],
                });
            }
            let (y, cache) = layer.forward(&cur, st, rng.as_deref_mut());
            if let Some(c) = cache {
                caches.push(c);
            }
            cur = y;
        }
        let shape = if n == 0 {
            self.input_shape.clone()
        } else {
            self.layers[n - 1].output_shape.clone()
        };
        Ok((Tensor::from_vec(&shape, cur), Tape { caches }))
    }

    /// Backward pass of a single step. Accumulates parameter gradients and
    /// returns the gradient w.r.t. the input.
    pub fn backward(&mut self, tape: &Tape<T>, dy: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let mut out =
            self.backward_through_time(std::slice::from_ref(tape), std::slice::from_ref(dy))?;
        Ok(out.pop().expect("one step"))
    }

    /// Backpropagation through time over consecutive steps of one sequence.
    /// `dys[t]` is the loss gradient w.r.t. the output of step `t`.
    pub fn backward_through_time(
        &mut self,
        tapes: &[Tape<T>],
        dys: &[Tensor<T>],
    ) -> Result<Vec<Tensor<T>>, NnError> {
        if tapes.len() != dys.len() {
            return Err(NnError::MissingCache(format!(
                "{} tapes for {} output gradients",
                tapes.len(),
                dys.len()
            )));
        }
        let n = self.layers.len();
        let mut carries: Vec<Option<(Vec<T>, Vec<T>)>> = self
            .layers
            .iter()
            .map(|l| match l.spec {
                LayerSpec::Lstm { units } => Some((vec![T::zero(); units], vec![T::zero(); units])),
                _ => None,
            })
            .collect();
        let mut dxs = vec![None; tapes.len()];
        for t in (0..tapes.len()).rev() {
            let tape = &tapes[t];
            if tape.caches.len() != n {
                return Err(NnError::MissingCache(format!(
                    "step {t} has {} cached layers, network has {n} (was the forward pass run in training mode?)",
                    tape.caches.len()
                )));
            }
            if dys[t].data.len() != self.output_shape().iter().product::<usize>() {
                return Err(NnError::Shape {
                    layer: n,
                    expected: self.output_shape().to_vec(),
                    got: dys[t].shape.clone(),
                });
            }
            let mut grad = dys[t].data.clone();
            for i in (0..n).rev() {
                grad = self.layers[i].backward(&tape.caches[i], &grad, carries[i].as_mut())?;
            }
            dxs[t] = Some(Tensor::from_vec(&self.input_shape, grad));
        }
        Ok(dxs.into_iter().map(|d| d.expect("filled")).collect())
    }
}
