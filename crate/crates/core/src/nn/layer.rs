use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scalar::{gemm, Mat};
use super::{NnError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    None,
    Relu,
    Tanh,
    Sigmoid,
    Softmax,
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl Activation {
    pub(crate) fn apply<T: Scalar>(self, z: &mut [T]) {
        match self {
            Activation::None => {}
            Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(T::zero())),
            Activation::Tanh => z.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Sigmoid => z.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Softmax => {
                let max = z.iter().cloned().fold(T::neg_infinity(), T::max);
                let mut sum = T::zero();
                for v in z.iter_mut() {
                    *v = (*v - max).exp();
                    sum = sum + *v;
                }
                z.iter_mut().for_each(|v| *v = *v / sum);
            }
        }
    }

    /// Gradient w.r.t. the pre-activation given the output `y` and `dy`.
    pub(crate) fn backward<T: Scalar>(self, y: &[T], dy: &[T]) -> Vec<T> {
        match self {
            Activation::None => dy.to_vec(),
            Activation::Relu => y
                .iter()
                .zip(dy)
                .map(|(&y, &d)| if y > T::zero() { d } else { T::zero() })
                .collect(),
            Activation::Tanh => y
                .iter()
                .zip(dy)
                .map(|(&y, &d)| d * (T::one() - y * y))
                .collect(),
            Activation::Sigmoid => y
                .iter()
                .zip(dy)
                .map(|(&y, &d)| d * y * (T::one() - y))
                .collect(),
            Activation::Softmax => {
                let dot = y
                    .iter()
                    .zip(dy)
                    .fold(T::zero(), |acc, (&y, &d)| acc + y * d);
                y.iter().zip(dy).map(|(&y, &d)| y * (d - dot)).collect()
            }
        }
    }
}

/// One row of an architecture table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv1d {
        filters: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
    },
    Conv2d {
        filters: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
    },
    MaxPool1d {
        size: usize,
        stride: usize,
    },
    MaxPool2d {
        size: usize,
        stride: usize,
    },
    Dense {
        units: usize,
        activation: Activation,
    },
    Dropout {
        rate: f64,
    },
    Lstm {
        units: usize,
    },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::MaxPool1d { .. } => "maxpool1d",
            LayerSpec::MaxPool2d { .. } => "maxpool2d",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Lstm { .. } => "lstm",
        }
    }

    fn validate(&self) -> Result<(), String> {
        let positive = |v: usize, what: &str| {
            if v == 0 {
                Err(format!("{what} must be >= 1"))
            } else {
                Ok(())
            }
        };
        match *self {
            LayerSpec::Conv1d {
                filters,
                kernel,
                stride,
                ..
            }
            | LayerSpec::Conv2d {
                filters,
                kernel,
                stride,
                ..
            } => {
                positive(filters, "channels")?;
                positive(kernel, "kernel")?;
                positive(stride, "stride")
            }
            LayerSpec::MaxPool1d { size, stride } | LayerSpec::MaxPool2d { size, stride } => {
                positive(size, "pool size")?;
                positive(stride, "stride")
            }
            LayerSpec::Dense { units, .. } | LayerSpec::Lstm { units } => positive(units, "units"),
            LayerSpec::Dropout { rate } => {
                if (0.0..1.0).contains(&rate) {
                    Ok(())
                } else {
                    Err(format!("dropout rate {rate} outside [0, 1)"))
                }
            }
        }
    }
}

/// Trainable tensor with its gradient and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<T>,
    pub grad: Vec<T>,
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> Param<T> {
    fn new(name: String, shape: Vec<usize>, value: Vec<T>) -> Self {
        let n = value.len();
        debug_assert_eq!(n, shape.iter().product::<usize>());
        Param {
            name,
            shape,
            value,
            grad: vec![T::zero(); n],
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = T::zero());
    }
}

/// "Same" padding geometry along one axis: `ceil(n / stride)` outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Axis {
    pub input: usize,
    pub output: usize,
    pub pad: usize,
}

impl Axis {
    fn same(input: usize, window: usize, stride: usize) -> Axis {
        let output = input.div_ceil(stride);
        let total = ((output - 1) * stride + window).saturating_sub(input);
        Axis {
            input,
            output,
            pad: total / 2,
        }
    }

    /// Input index for output `o` and window offset `k`, if inside the input.
    #[inline]
    fn source(&self, o: usize, k: usize, stride: usize) -> Option<usize> {
        let p = (o * stride + k) as isize - self.pad as isize;
        if p >= 0 && (p as usize) < self.input {
            Some(p as usize)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Cache<T> {
    Conv {
        cols: Vec<T>,
        y: Vec<T>,
    },
    Pool {
        argmax: Vec<usize>,
    },
    Dense {
        x: Vec<T>,
        y: Vec<T>,
    },
    Dropout {
        mask: Vec<T>,
    },
    Lstm {
        xh: Vec<T>,
        c_prev: Vec<T>,
        gates: Vec<T>,
        tanh_c: Vec<T>,
    },
}

/// Recurrent state of one LSTM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct Layer<T> {
    pub spec: LayerSpec,
    pub input_shape: Vec<usize>,
    pub output_shape: Vec<usize>,
    pub params: Vec<Param<T>>,
    axes: Vec<Axis>,
    /// Test fixture: negates this layer's parameter gradients, so that
    /// gradient checks can be shown to catch a broken backward pass.
    #[doc(hidden)]
    pub fault_negate_grads: bool,
}

fn uniform<T: Scalar>(rng: &mut ChaCha8Rng, n: usize, bound: f64) -> Vec<T> {
    (0..n)
        .map(|_| T::of(rng.gen_range(-bound..=bound)))
        .collect()
}

impl<T: Scalar> Layer<T> {
    /// Builds a layer for `input_shape`, drawing initial weights from `rng`.
    pub fn new(
        spec: LayerSpec,
        input_shape: &[usize],
        prefix: &str,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, String> {
        spec.validate()?;
        let flat: usize = input_shape.iter().product();
        if flat == 0 {
            return Err(format!("empty input {input_shape:?}"));
        }
        let w_name = format!("{prefix}.weight");
        let b_name = format!("{prefix}.bias");
        let mut axes = Vec::new();
        let (output_shape, params) = match spec {
            LayerSpec::Conv1d {
                filters,
                kernel,
                stride,
                ..
            } => {
                let [c, l] = <[usize; 2]>::try_from(input_shape)
                    .map_err(|_| format!("conv1d expects [C][L], got {input_shape:?}"))?;
                let ax = Axis::same(l, kernel, stride);
                axes.push(ax);
                let fan_in = c * kernel;
                let w = uniform(rng, filters * fan_in, (6.0 / fan_in as f64).sqrt());
                (
                    vec![filters, ax.output],
                    vec![
                        Param::new(w_name, vec![filters, c, kernel], w),
                        Param::new(b_name, vec![filters], vec![T::zero(); filters]),
                    ],
                )
            }
            LayerSpec::Conv2d {
                filters,
                kernel,
                stride,
                ..
            } => {
                let [c, h, w] = <[usize; 3]>::try_from(input_shape)
                    .map_err(|_| format!("conv2d expects [C][H][W], got {input_shape:?}"))?;
                let (ah, aw) = (Axis::same(h, kernel, stride), Axis::same(w, kernel, stride));
                axes.extend([ah, aw]);
                let fan_in = c * kernel * kernel;
                let wv = uniform(rng, filters * fan_in, (6.0 / fan_in as f64).sqrt());
                (
                    vec![filters, ah.output, aw.output],
                    vec![
                        Param::new(w_name, vec![filters, c, kernel, kernel], wv),
                        Param::new(b_name, vec![filters], vec![T::zero(); filters]),
                    ],
                )
            }
            LayerSpec::MaxPool1d { size, stride } => {
                let [c, l] = <[usize; 2]>::try_from(input_shape)
                    .map_err(|_| format!("maxpool1d expects [C][L], got {input_shape:?}"))?;
                let ax = Axis::same(l, size, stride);
                axes.push(ax);
                (vec![c, ax.output], Vec::new())
            }
            LayerSpec::MaxPool2d { size, stride } => {
                let [c, h, w] = <[usize; 3]>::try_from(input_shape)
                    .map_err(|_| format!("maxpool2d expects [C][H][W], got {input_shape:?}"))?;
                let (ah, aw) = (Axis::same(h, size, stride), Axis::same(w, size, stride));
                axes.extend([ah, aw]);
                (vec![c, ah.output, aw.output], Vec::new())
            }
            LayerSpec::Dense { units, .. } => {
                let w = uniform(rng, units * flat, (6.0 / flat as f64).sqrt());
                (
                    vec![units],
                    vec![
                        Param::new(w_name, vec![units, flat], w),
                        Param::new(b_name, vec![units], vec![T::zero(); units]),
                    ],
                )
            }
            LayerSpec::Dropout { .. } => (input_shape.to_vec(), Vec::new()),
            LayerSpec::Lstm { units } => {
                let w = uniform(rng, 4 * units * (flat + units), 1.0 / (units as f64).sqrt());
                let mut b = vec![T::zero(); 4 * units];
                // gate order i, f, g, o; forget gate starts open
                b[units..2 * units].iter_mut().for_each(|v| *v = T::one());
                (
                    vec![units],
                    vec![
                        Param::new(w_name, vec![4 * units, flat + units], w),
                        Param::new(b_name, vec![4 * units], b),
                    ],
                )
            }
        };
        Ok(Layer {
            spec,
            input_shape: input_shape.to_vec(),
            output_shape,
            params,
            axes,
            fault_negate_grads: false,
        })
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(Param::len).sum()
    }

    pub fn is_recurrent(&self) -> bool {
        matches!(self.spec, LayerSpec::Lstm { .. })
    }

    pub fn zero_state(&self) -> Option<LstmState<T>> {
        match self.spec {
            LayerSpec::Lstm { units } => Some(LstmState {
                h: vec![T::zero(); units],
                c: vec![T::zero(); units],
            }),
            _ => None,
        }
    }

    /// Forward pass of one sample. `rng` is `Some` in training mode; a cache is
    /// returned only then.
    pub(crate) fn forward(
        &self,
        x: &[T],
        state: Option<&mut LstmState<T>>,
        rng: Option<&mut ChaCha8Rng>,
    ) -> (Vec<T>, Option<Cache<T>>) {
        let train = rng.is_some();
        match self.spec {
            LayerSpec::Conv1d {
                filters,
                kernel,
                stride,
                activation,
            } => {
                let c = self.input_shape[0];
                let ax = self.axes[0];
                let cols = self.im2col_1d(x, c, kernel, stride, ax);
                let mut y = self.affine_cols(&cols, filters, c * kernel, ax.output);
                activation.apply(&mut y);
                let cache = train.then(|| Cache::Conv { cols, y: y.clone() });
                (y, cache)
            }
            LayerSpec::Conv2d {
                filters,
                kernel,
                stride,
                activation,
            } => {
                let c = self.input_shape[0];
                let cols = self.im2col_2d(x, c, kernel, stride);
                let p = self.axes[0].output * self.axes[1].output;
                let mut y = self.affine_cols(&cols, filters, c * kernel * kernel, p);
                activation.apply(&mut y);
                let cache = train.then(|| Cache::Conv { cols, y: y.clone() });
                (y, cache)
            }
            LayerSpec::MaxPool1d { size, stride } => {
                let c = self.input_shape[0];
                let ax = self.axes[0];
                let mut y = Vec::with_capacity(c * ax.output);
                let mut argmax = Vec::with_capacity(c * ax.output);
                for ch in 0..c {
                    let base = ch * ax.input;
                    for o in 0..ax.output {
                        let mut best = (T::neg_infinity(), usize::MAX);
                        for k in 0..size {
                            if let Some(i) = ax.source(o, k, stride) {
                                if x[base + i] > best.0 || best.1 == usize::MAX {
                                    best = (x[base + i], base + i);
                                }
                            }
                        }
                        y.push(best.0);
                        argmax.push(best.1);
                    }
                }
                (y, train.then_some(Cache::Pool { argmax }))
            }
            LayerSpec::MaxPool2d { size, stride } => {
                let c = self.input_shape[0];
                let (ah, aw) = (self.axes[0], self.axes[1]);
                let mut y = Vec::with_capacity(c * ah.output * aw.output);
                let mut argmax = Vec::with_capacity(y.capacity());
                for ch in 0..c {
                    let base = ch * ah.input * aw.input;
                    for oh in 0..ah.output {
                        for ow in 0..aw.output {
                            let mut best = (T::neg_infinity(), usize::MAX);
                            for kh in 0..size {
                                let Some(ih) = ah.source(oh, kh, stride) else {
                                    continue;
                                };
                                for kw in 0..size {
                                    let Some(iw) = aw.source(ow, kw, stride) else {
                                        continue;
                                    };
                                    let idx = base + ih * aw.input + iw;
                                    if x[idx] > best.0 || best.1 == usize::MAX {
                                        best = (x[idx], idx);
                                    }
                                }
                            }
                            y.push(best.0);
                            argmax.push(best.1);
                        }
                    }
                }
                (y, train.then_some(Cache::Pool { argmax }))
            }
            LayerSpec::Dense { units, activation } => {
                let mut y = self.params[1].value.clone();
                gemm(
                    Mat::new(&self.params[0].value, units, x.len()),
                    Mat::new(x, x.len(), 1),
                    T::one(),
                    &mut y,
                );
                activation.apply(&mut y);
                let cache = train.then(|| Cache::Dense {
                    x: x.to_vec(),
                    y: y.clone(),
                });
                (y, cache)
            }
            LayerSpec::Dropout { rate } => match rng {
                Some(rng) => {
                    let keep = T::of(1.0 / (1.0 - rate));
                    let mask: Vec<T> = (0..x.len())
                        .map(|_| {
                            if rng.gen::<f64>() >= rate {
                                keep
                            } else {
                                T::zero()
                            }
                        })
                        .collect();
                    let y = x.iter().zip(&mask).map(|(&a, &m)| a * m).collect();
                    (y, Some(Cache::Dropout { mask }))
                }
                None => (x.to_vec(), None),
            },
            LayerSpec::Lstm { units } => {
                let state = state.expect("LSTM layer needs a state");
                let mut xh = Vec::with_capacity(x.len() + units);
                xh.extend_from_slice(x);
                xh.extend_from_slice(&state.h);
                let mut z = self.params[1].value.clone();
                gemm(
                    Mat::new(&self.params[0].value, 4 * units, xh.len()),
                    Mat::new(&xh, xh.len(), 1),
                    T::one(),
                    &mut z,
                );
                for (k, v) in z.iter_mut().enumerate() {
                    *v = if (2 * units..3 * units).contains(&k) {
                        v.tanh()
                    } else {
                        sigmoid(*v)
                    };
                }
                let c_prev = std::mem::take(&mut state.c);
                let mut c = vec![T::zero(); units];
                let mut tanh_c = vec![T::zero(); units];
                let mut h = vec![T::zero(); units];
                for j in 0..units {
                    let (i, f, g, o) = (z[j], z[units + j], z[2 * units + j], z[3 * units + j]);
                    c[j] = f * c_prev[j] + i * g;
                    tanh_c[j] = c[j].tanh();
                    h[j] = o * tanh_c[j];
                }
                state.h = h.clone();
                state.c = c;
                let cache = train.then_some(Cache::Lstm {
                    xh,
                    c_prev,
                    gates: z,
                    tanh_c,
                });
                (h, cache)
            }
        }
    }

    /// Backward pass: accumulates parameter gradients and returns `dx`.
    ///
    /// For LSTM layers `carry` holds `(dh, dc)` flowing back from the next
    /// time step and is replaced by the carry into the previous step.
    pub(crate) fn backward(
        &mut self,
        cache: &Cache<T>,
        dy: &[T],
        carry: Option<&mut (Vec<T>, Vec<T>)>,
    ) -> Result<Vec<T>, NnError> {
        if !self.fault_negate_grads {
            return self.backward_exact(cache, dy, carry);
        }
        let before: Vec<Vec<T>> = self.params.iter().map(|p| p.grad.clone()).collect();
        let dx = self.backward_exact(cache, dy, carry)?;
        for (p, old) in self.params.iter_mut().zip(before) {
            for (g, o) in p.grad.iter_mut().zip(old) {
                *g = o + o - *g;
            }
        }
        Ok(dx)
    }

    fn backward_exact(
        &mut self,
        cache: &Cache<T>,
        dy: &[T],
        carry: Option<&mut (Vec<T>, Vec<T>)>,
    ) -> Result<Vec<T>, NnError> {
        let mismatch = || {
            NnError::MissingCache(format!(
                "{} layer was given a cache of another kind",
                self.spec.kind()
            ))
        };
        match (&self.spec, cache) {
            (
                &LayerSpec::Conv1d {
                    filters,
                    kernel,
                    stride,
                    activation,
                },
                Cache::Conv { cols, y },
            ) => {
                let c = self.input_shape[0];
                let ax = self.axes[0];
                let dz = activation.backward(y, dy);
                let dcols = self.affine_cols_backward(cols, &dz, filters, c * kernel, ax.output);
                let mut dx = vec![T::zero(); c * ax.input];
                for ch in 0..c {
                    for k in 0..kernel {
                        let row = &dcols
                            [(ch * kernel + k) * ax.output..(ch * kernel + k + 1) * ax.output];
                        for (o, &g) in row.iter().enumerate() {
                            if let Some(i) = ax.source(o, k, stride) {
                                dx[ch * ax.input + i] = dx[ch * ax.input + i] + g;
                            }
                        }
                    }
                }
                Ok(dx)
            }
            (
                &LayerSpec::Conv2d {
                    filters,
                    kernel,
                    stride,
                    activation,
                },
                Cache::Conv { cols, y },
            ) => {
                let c = self.input_shape[0];
                let (ah, aw) = (self.axes[0], self.axes[1]);
                let p = ah.output * aw.output;
                let dz = activation.backward(y, dy);
                let dcols = self.affine_cols_backward(cols, &dz, filters, c * kernel * kernel, p);
                let mut dx = vec![T::zero(); c * ah.input * aw.input];
                for ch in 0..c {
                    for kh in 0..kernel {
                        for kw in 0..kernel {
                            let r = (ch * kernel + kh) * kernel + kw;
                            let row = &dcols[r * p..(r + 1) * p];
                            for oh in 0..ah.output {
                                let Some(ih) = ah.source(oh, kh, stride) else {
                                    continue;
                                };
                                for ow in 0..aw.output {
                                    let Some(iw) = aw.source(ow, kw, stride) else {
                                        continue;
                                    };
                                    let idx = (ch * ah.input + ih) * aw.input + iw;
                                    dx[idx] = dx[idx] + row[oh * aw.output + ow];
                                }
                            }
                        }
                    }
                }
                Ok(dx)
            }
            (LayerSpec::MaxPool1d { .. } | LayerSpec::MaxPool2d { .. }, Cache::Pool { argmax }) => {
                let mut dx = vec![T::zero(); self.input_shape.iter().product()];
                for (&i, &g) in argmax.iter().zip(dy) {
                    dx[i] = dx[i] + g;
                }
                Ok(dx)
            }
            (&LayerSpec::Dense { units, activation }, Cache::Dense { x, y }) => {
                let dz = activation.backward(y, dy);
                let n = x.len();
                gemm(
                    Mat::new(&dz, units, 1),
                    Mat::new(x, 1, n),
                    T::one(),
                    &mut self.params[0].grad,
                );
                add_into(&mut self.params[1].grad, &dz);
                let mut dx = vec![T::zero(); n];
                gemm(
                    Mat::new(&self.params[0].value, units, n).t(),
                    Mat::new(&dz, units, 1),
                    T::zero(),
                    &mut dx,
                );
                Ok(dx)
            }
            (LayerSpec::Dropout { .. }, Cache::Dropout { mask }) => {
                Ok(dy.iter().zip(mask).map(|(&d, &m)| d * m).collect())
            }
            (
                &LayerSpec::Lstm { units },
                Cache::Lstm {
                    xh,
                    c_prev,
                    gates,
                    tanh_c,
                },
            ) => {
                let h = units;
                let carry = carry.expect("LSTM backward needs a carry");
                let (dh_next, dc_next) = (&carry.0, &carry.1);
                let mut dz = vec![T::zero(); 4 * h];
                let mut dc_prev = vec![T::zero(); h];
                for j in 0..h {
                    let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                    let dh = dy[j] + dh_next[j];
                    let d_o = dh * tanh_c[j];
                    let dc = dh * o * (T::one() - tanh_c[j] * tanh_c[j]) + dc_next[j];
                    dz[j] = dc * g * i * (T::one() - i);
                    dz[h + j] = dc * c_prev[j] * f * (T::one() - f);
                    dz[2 * h + j] = dc * i * (T::one() - g * g);
                    dz[3 * h + j] = d_o * o * (T::one() - o);
                    dc_prev[j] = dc * f;
                }
                let n = xh.len();
                gemm(
                    Mat::new(&dz, 4 * h, 1),
                    Mat::new(xh, 1, n),
                    T::one(),
                    &mut self.params[0].grad,
                );
                add_into(&mut self.params[1].grad, &dz);
                let mut dxh = vec![T::zero(); n];
                gemm(
                    Mat::new(&self.params[0].value, 4 * h, n).t(),
                    Mat::new(&dz, 4 * h, 1),
                    T::zero(),
                    &mut dxh,
                );
                let dh_prev = dxh.split_off(n - h);
                *carry = (dh_prev, dc_prev);
                Ok(dxh)
            }
            _ => Err(mismatch()),
        }
    }

    fn im2col_1d(&self, x: &[T], c: usize, kernel: usize, stride: usize, ax: Axis) -> Vec<T> {
        let mut cols = vec![T::zero(); c * kernel * ax.output];
        for ch in 0..c {
            for k in 0..kernel {
                let row =
                    &mut cols[(ch * kernel + k) * ax.output..(ch * kernel + k + 1) * ax.output];
                for (o, v) in row.iter_mut().enumerate() {
                    if let Some(i) = ax.source(o, k, stride) {
                        *v = x[ch * ax.input + i];
                    }
                }
            }
        }
        cols
    }

    fn im2col_2d(&self, x: &[T], c: usize, kernel: usize, stride: usize) -> Vec<T> {
        let (ah, aw) = (self.axes[0], self.axes[1]);
        let p = ah.output * aw.output;
        let mut cols = vec![T::zero(); c * kernel * kernel * p];
        for ch in 0..c {
            for kh in 0..kernel {
                for kw in 0..kernel {
                    let r = (ch * kernel + kh) * kernel + kw;
                    let row = &mut cols[r * p..(r + 1) * p];
                    for oh in 0..ah.output {
                        let Some(ih) = ah.source(oh, kh, stride) else {
                            continue;
                        };
                        for ow in 0..aw.output {
                            let Some(iw) = aw.source(ow, kw, stride) else {
                                continue;
                            };
                            row[oh * aw.output + ow] = x[(ch * ah.input + ih) * aw.input + iw];
                        }
                    }
                }
            }
        }
        cols
    }

    /// `W[f][fan_in] * cols[fan_in][p] + b`.
    fn affine_cols(&self, cols: &[T], filters: usize, fan_in: usize, p: usize) -> Vec<T> {
        let mut y = Vec::with_capacity(filters * p);
        for &b in &self.params[1].value {
            y.extend(std::iter::repeat_n(b, p));
        }
        gemm(
            Mat::new(&self.params[0].value, filters, fan_in),
            Mat::new(cols, fan_in, p),
            T::one(),
            &mut y,
        );
        y
    }

    fn affine_cols_backward(
        &mut self,
        cols: &[T],
        dz: &[T],
        filters: usize,
        fan_in: usize,
        p: usize,
    ) -> Vec<T> {
        gemm(
            Mat::new(dz, filters, p),
            Mat::new(cols, fan_in, p).t(),
            T::one(),
            &mut self.params[0].grad,
        );
        for (f, g) in self.params[1].grad.iter_mut().enumerate() {
            *g = dz[f * p..(f + 1) * p].iter().fold(*g, |acc, &v| acc + v);
        }
        let mut dcols = vec![T::zero(); fan_in * p];
        gemm(
            Mat::new(&self.params[0].value, filters, fan_in).t(),
            Mat::new(dz, filters, p),
            T::zero(),
            &mut dcols,
        );
        dcols
    }
}

impl Layer<f32> {
    pub fn widen(&self) -> Layer<f64> {
        Layer {
            spec: self.spec.clone(),
            input_shape: self.input_shape.clone(),
            output_shape: self.output_shape.clone(),
            params: self
                .params
                .iter()
                .map(|p| {
                    Param::new(
                        p.name.clone(),
                        p.shape.clone(),
                        p.value.iter().map(|&v| v as f64).collect(),
                    )
                })
                .collect(),
            axes: self.axes.clone(),
            fault_negate_grads: self.fault_negate_grads,
        }
    }
}

fn add_into<T: Scalar>(acc: &mut [T], v: &[T]) {
    for (a, &b) in acc.iter_mut().zip(v) {
        *a = *a + b;
    }
}
