//! Std companion to `comfeat-core`: WAV decoding, the CFEM embedding and
//! CFWT weight formats, CSV manifests, the training/evaluation pipeline over
//! files, the HTTP prediction service and the `comfeat` command line.

use std::path::{Path, PathBuf};

use comfeat_core::audio::AudioError;
use comfeat_core::feature::{FeatureError, FeatureSource};
use comfeat_core::metrics::MetricsError;
use comfeat_core::nn::NetError;
use comfeat_core::spectral::SpectralError;
use comfeat_core::train::TrainError;
use thiserror::Error;

pub mod cli;
pub mod config;
pub mod embedding;
pub mod manifest;
pub mod pipeline;
pub mod predict;
pub mod service;
pub mod synthetic;
pub mod wav;
pub mod weights;

pub use comfeat_core as core;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },
    #[error(transparent)]
    Wav(#[from] wav::WavError),
    #[error(transparent)]
    Embedding(#[from] embedding::EmbeddingError),
    #[error(transparent)]
    Weights(#[from] weights::WeightsError),
    #[error(transparent)]
    Manifest(#[from] manifest::ManifestError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Predict(#[from] predict::PredictError),
    #[error("utterance `{id}` has no {feature} artifact{}", path.as_ref().map(|p| format!(" at {}", p.display())).unwrap_or_default())]
    MissingArtifact {
        id: String,
        feature: FeatureSource,
        path: Option<PathBuf>,
    },
    #[error("feature source `{0}` cannot be used in a feature set")]
    UnsupportedSource(FeatureSource),
    #[error("{0}")]
    Incompatible(String),
    #[error("server on {addr}: {err}")]
    Bind { addr: String, err: std::io::Error },
    #[error("no entries to evaluate")]
    Empty,
}

impl Error {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            err,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
