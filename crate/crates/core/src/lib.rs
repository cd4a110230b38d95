//! Signal processing and fusion-regressor core for speech-based depression
//! severity estimation.
//!
//! Everything here is `no_std` with `alloc`: audio arrives as decoded sample
//! buffers, features leave as plain vectors, and model parameters are owned
//! `Vec<f64>` tensors. File formats, the CLI and the HTTP service live in the
//! `comfeat` crate.

#![no_std]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod audio;
pub mod feature;
pub mod metrics;
pub mod nn;
pub mod spectral;
pub mod train;

pub use audio::{AudioClip, AudioError, MODEL_SAMPLE_RATE};
pub use feature::{FeatureError, FeatureSource, FeatureVector};
pub use metrics::{evaluate_predictions, severity_band, EvalMetrics, SeverityBand};
pub use nn::{AdamState, FusionModel, ModelConfig, NetError, Parameters};
pub use spectral::{FeatureMatrix, FilterScale, SpectralConfig, SpectralError};
pub use train::{split_dataset, train, EpochLog, Sample, TrainError, TrainOptions};
