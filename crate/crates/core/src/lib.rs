//! Reinforcement-learning link selection for multi-AP Wi-Fi human activity
//! sensing.
//!
//! The crate is organised bottom-up:
//!
//! * [`sim`] synthesises multipath CSI for a multi-AP deployment with a
//!   planted per-link relevance mask.
//! * [`preprocess`] turns raw per-link CSI into normalised behaviour streams
//!   and wavelet spectrum images.
//! * [`nn`] is a small from-scratch network kernel (conv, pooling, LSTM,
//!   dense, dropout, Adam, finite-difference checking, checkpoints).
//! * [`agent`] is the link-selection policy together with its episode loop,
//!   returns and losses.
//! * [`classifier`] holds the per-link prediction, group averaging and the
//!   classification objective.
//! * [`harness`] orchestrates training, evaluation of the five comparison
//!   cases, metrics and reports; the `wilink` binary is a thin CLI over it.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod agent;
pub mod classifier;
pub mod error;
pub mod harness;
pub mod nn;
pub mod preprocess;
pub mod sim;

pub use error::{Error, Result};

/// Number of activity classes.
pub const NUM_CLASSES: usize = 5;
