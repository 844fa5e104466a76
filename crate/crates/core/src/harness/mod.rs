//! Experiment orchestration: dataset directories, feature extraction, the
//! five link-exploitation cases, training, evaluation, timing and reports.

mod bench;
mod cases;
mod config;
mod data;
mod eval;
mod features;
mod gradcheck;
mod model;
mod train;

pub use bench::{bench, BenchReport, WARMUP_SAMPLES};
pub use cases::{CaseSpec, LinkPolicy};
pub use config::{parse_gen_config, GenConfig};
pub use data::{
    dataset_hash, write_csd, write_dataset_dir, DatasetDir, DatasetSidecar, DATASET_FILE,
    MANIFEST_FILE,
};
pub use eval::{evaluate, metrics, predict, Metrics, Prediction, Report, ReportInputs};
pub use features::{sample_features, split_features, FeatureSet, FeatureSpec, SampleFeatures};
pub use gradcheck::{
    gradcheck_cases, gradcheck_suite, run_gradcheck_case, GradCheckCase, GradCheckLine,
    GRADCHECK_TOLERANCE,
};
pub use model::{Model, ModelMeta};
pub use train::{train, write_loss_csv, EpochLog, TrainOptions, TrainOutcome};
