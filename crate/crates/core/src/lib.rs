//! Bounding-box-only pedestrian trajectory forecasting on the CPU.
//!
//! The forecaster reads the past `k` boxes of a tracked person, encodes them
//! with an LSTM auto-encoder, decodes `p` future change vectors with a second
//! LSTM seeded from the encoder state, and turns them into absolute boxes with
//! a parameter-free cumulative sum. Training minimizes a weighted sum of L1
//! reconstruction and trajectory errors with Adam.
//!
//! Modules, bottom-up:
//! * [`tensor`], [`lstm`], [`ops`], [`adam`], [`gradcheck`]: numeric kernel
//! * [`model`]: features, network and objective
//! * [`data`]: track CSV ingestion, slicing, folds, synthetic tracks
//! * [`training`]: optimization loop and weight files
//! * [`eval`]: metrics, baselines, throughput benchmark, ablation harness

pub mod adam;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod kv;
pub mod lstm;
pub mod model;
pub mod ops;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
