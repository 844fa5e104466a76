//! Minimal neural-network kernel: strided convolutions with "same" padding,
//! max pooling, dense, dropout and LSTM layers with hand-written backward
//! passes, Adam, finite-difference checking and a flat checkpoint format.

mod checkpoint;
mod gradcheck;
mod layer;
mod network;
mod optim;
mod scalar;
mod tensor;

pub use checkpoint::{
    checkpoint_hash, load_checkpoint, restore_params, save_checkpoint, CheckpointManifest,
    TensorEntry, TensorMap, BLOB_FILE, CHECKPOINT_FORMAT, MANIFEST_FILE,
};
pub use gradcheck::{grad_check, require_grad_check, GradCheckReport, GRADCHECK_STEP};
pub use layer::{Activation, Layer, LayerSpec, LstmState, Param};
pub use network::{build_network, Arch, Mode, NetState, Network, Tape, CONTEXT_UNITS};
pub use optim::{Adam, HyperParams};
pub use scalar::Scalar;
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch at layer {layer}: expected {expected:?}, got {got:?}")]
    Shape {
        layer: usize,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("cannot build {arch}: {trace}")]
    Construction { arch: String, trace: String },
    #[error("backward pass without forward caches: {0}")]
    MissingCache(String),
    #[error("non-finite value: {what}")]
    NonFinite { what: String },
    #[error("gradient check failed at {worst}: relative error {error:.3e}")]
    GradCheckFailed { worst: String, error: f64 },
    #[error("invalid hyperparameters: {0}")]
    Hyper(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Converts an f32 network into an f64 copy (same names, values widened).
pub fn widen(net: &Network<f32>) -> Network<f64> {
    Network {
        arch: net.arch,
        input_shape: net.input_shape.clone(),
        layers: net.layers.iter().map(Layer::widen).collect(),
    }
}
