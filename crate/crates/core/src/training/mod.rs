//! Optimization loop, learning-rate schedule and weight files.

pub mod config;
pub mod run;
pub mod trainer;
pub mod weights;

pub use config::{lr_schedule, TrainConfig};
pub use run::{train_run, RunArtifacts};
pub use trainer::{
    clip_global_norm, samples_from_minitracks, train, train_samples, train_with, EpochStats, TrainHistory,
    HISTORY_HEADER,
};
pub use weights::{
    decode_model, encode_model, load_model, load_model_expecting, save_model, WeightHeader, FORMAT_VERSION,
};
