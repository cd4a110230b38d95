//! Single-utterance prediction shared by the CLI and the HTTP service.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use comfeat_core::feature::{FeatureSource, FeatureVector};
use comfeat_core::metrics::{severity_band, SeverityBand};
use comfeat_core::nn::FusionModel;
use comfeat_core::spectral::{SpectralConfig, SpectralError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbeddingError, EmbeddingFile};
use crate::pipeline::{to_model_rate, SpectralFrontEnd};
use crate::wav::{decode_wav, WavError};
use crate::weights::{load_weights, model_version, weights_digest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub raw_score: f64,
    /// `raw_score` clamped to [0, 24].
    pub display_score: f64,
    pub band: SeverityBand,
    pub feature_set: Vec<FeatureSource>,
    pub model_version: String,
    pub processing_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub feature_set: Vec<FeatureSource>,
    pub dims: Vec<usize>,
    pub fused_dim: usize,
    pub version: String,
    pub digest: String,
}

#[derive(Debug, Error)]
pub enum PredictError {
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("more than one {0} embedding supplied")]
    DuplicateEmbedding(FeatureSource),
    #[error("the model needs a {0} embedding but none was supplied")]
    MissingEmbedding(FeatureSource),
    #[error("audio too short for feature extraction: {0}")]
    AudioTooShort(SpectralError),
    #[error("feature extraction failed: {0}")]
    Extraction(String),
}

impl PredictError {
    /// The HTTP status this failure maps to.
    pub fn http_status(&self) -> u16 {
        match self {
            PredictError::Wav(WavError::MalformedFile(_)) => 400,
            PredictError::Wav(WavError::UnsupportedFormat { .. }) => 415,
            PredictError::Wav(WavError::TooLong) => 413,
            PredictError::Embedding(EmbeddingError::DimensionMismatch { .. }) => 422,
            PredictError::Embedding(_) | PredictError::DuplicateEmbedding(_) => 400,
            PredictError::MissingEmbedding(_) | PredictError::AudioTooShort(_) => 422,
            PredictError::Extraction(_) => 500,
        }
    }
}

/// A loaded model plus everything needed to turn uploads into a score.
#[derive(Debug, Clone)]
pub struct Predictor {
    model: FusionModel,
    front_end: SpectralFrontEnd,
    digest: String,
    version: String,
}

impl Predictor {
    pub fn from_weights(bytes: &[u8], spectral: &SpectralConfig) -> crate::Result<Self> {
        let model = load_weights(bytes)?;
        for b in &model.config().branches {
            if b.source.is_spectral() && b.input_dim != spectral.n_coeffs {
                return Err(crate::Error::Incompatible(format!(
                    "model expects {}-dim {} input but the spectral config yields {}",
                    b.input_dim, b.source, spectral.n_coeffs
                )));
            }
        }
        let digest = weights_digest(bytes);
        Ok(Self {
            version: model_version(&digest),
            front_end: SpectralFrontEnd::new(spectral)?,
            model,
            digest,
        })
    }

    pub fn load(path: &Path, spectral: &SpectralConfig) -> crate::Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| crate::Error::io(path, e))?;
        Self::from_weights(&bytes, spectral)
    }

    pub fn model(&self) -> &FusionModel {
        &self.model
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn info(&self) -> ModelInfo {
        let cfg = self.model.config();
        ModelInfo {
            feature_set: cfg.feature_set(),
            dims: cfg.branches.iter().map(|b| b.input_dim).collect(),
            fused_dim: cfg.fused_dim(),
            version: self.version.clone(),
            digest: self.digest.clone(),
        }
    }

    /// Decodes `audio`, reads each CFEM upload (identified by its header
    /// source), assembles the model's inputs and scores them.
    ///
    /// Embeddings for sources the model does not use are ignored. Audio is
    /// always decoded, even for models without a spectral branch.
    pub fn predict<B: AsRef<[u8]>>(
        &self,
        audio: &[u8],
        embeddings: &[B],
    ) -> Result<Prediction, PredictError> {
        let started = Instant::now();
        let feature_set = self.model.feature_set();

        let mut files: BTreeMap<FeatureSource, EmbeddingFile> = BTreeMap::new();
        for bytes in embeddings {
            let file = EmbeddingFile::parse(bytes.as_ref())?;
            let source = file.source;
            if files.insert(source, file).is_some() {
                return Err(PredictError::DuplicateEmbedding(source));
            }
        }

        let clip = decode_wav(audio)?;
        let needs_audio = feature_set.iter().any(|s| s.is_spectral());
        let clip = if needs_audio {
            Some(to_model_rate(clip).map_err(extraction)?)
        } else {
            None
        };

        let mut inputs = Vec::with_capacity(feature_set.len());
        for &source in &feature_set {
            let v = if source.is_spectral() {
                let clip = clip.as_ref().expect("decoded when a spectral branch exists");
                self.front_end.pooled(clip, source).map_err(extraction)?
            } else {
                let file = files
                    .remove(&source)
                    .ok_or(PredictError::MissingEmbedding(source))?;
                FeatureVector::new(source, file.pooled()).map_err(|_| EmbeddingError::NonFinite)?
            };
            inputs.push(v);
        }
        let raw_score = self
            .model
            .predict(&inputs)
            .map_err(|e| PredictError::Extraction(e.to_string()))?;
        let (display_score, band) =
            severity_band(raw_score).map_err(|e| PredictError::Extraction(e.to_string()))?;
        Ok(Prediction {
            raw_score,
            display_score,
            band,
            feature_set,
            model_version: self.version.clone(),
            processing_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }
}

fn extraction(e: crate::Error) -> PredictError {
    match e {
        crate::Error::Spectral(s @ SpectralError::TooShort { .. }) => PredictError::AudioTooShort(s),
        crate::Error::Audio(a) => PredictError::Wav(a.into()),
        other => PredictError::Extraction(other.to_string()),
    }
}
