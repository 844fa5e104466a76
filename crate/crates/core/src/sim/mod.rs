//! Synthetic multipath CSI for a multi-AP / multi-receiver deployment.
//!
//! Every sample is the superposition of a static line-of-sight path, a single
//! human reflection whose delay follows the activity's motion track, and
//! receiver noise (white measurement noise plus a per-link interference
//! process that is coherent across antennas and subcarriers). The planted
//! relevance mask marks the links whose human-path amplitude clears the
//! configured SNR threshold.

mod activity;
mod csd;
mod dataset;
mod environment;
mod sample;

pub use activity::{Activity, ActivityProfile, DurationShape, MotionTrack};
pub use csd::{CsdHeader, CsdReader, CsdWriter, CSD_MAGIC, CSD_VERSION};
pub use dataset::{generate_dataset, Dataset, DatasetManifest, DatasetSpec, SampleMeta, Split};
pub use environment::{
    build_environment, Environment, EnvironmentConfig, Link, Point, SPEED_OF_LIGHT,
};
pub use sample::{
    generate_sample, human_path_amplitudes, informative_links, relevance_ratios, CsiSample,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid environment config: {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("location {0} out of range 1..=16")]
    Location(usize),
    #[error("invalid dataset spec: {0}")]
    Spec(String),
    #[error("CSD format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Number of grid locations the human can occupy.
pub const NUM_LOCATIONS: usize = 16;

/// SplitMix64 finaliser, used to derive independent per-sample seeds.
pub(crate) fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
