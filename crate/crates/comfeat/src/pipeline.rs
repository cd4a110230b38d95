//! Feature assembly from manifest entries, training and evaluation.

use std::fs;
use std::path::Path;

use comfeat_core::audio::{resample, to_mono, AudioClip, MODEL_SAMPLE_RATE};
use comfeat_core::feature::{FeatureSource, FeatureVector};
use comfeat_core::metrics::evaluate_predictions;
use comfeat_core::nn::{BranchSpec, FusionModel, ModelConfig};
use comfeat_core::spectral::{temporal_mean_pool, CepstralExtractor, SpectralConfig};
use comfeat_core::train::{self, split_dataset, EpochLog, Sample, TrainOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::load_embedding;
use crate::manifest::ManifestEntry;
use crate::wav::decode_wav;
use crate::weights::{model_version, save_weights, weights_digest};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Branch order of the fused model.
    pub feature_set: Vec<FeatureSource>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub dropout_p: f64,
    pub seed: u64,
    /// Train and dev fractions; the remainder is held out as test.
    pub split_ratios: (f64, f64),
    pub early_stop_patience: usize,
    pub conv_filters: usize,
    pub kernel_size: usize,
    pub fcn_dims: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            feature_set: vec![FeatureSource::Trillsson, FeatureSource::Mfcc],
            epochs: 100,
            batch_size: 16,
            lr: 1e-3,
            dropout_p: 0.2,
            seed: 0,
            split_ratios: (0.8, 0.1),
            early_stop_patience: 10,
            conv_filters: 32,
            kernel_size: 3,
            fcn_dims: vec![256, 90],
        }
    }
}

impl TrainConfig {
    pub fn options(&self) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            early_stop_patience: self.early_stop_patience,
        }
    }

    /// Model architecture for this feature set; widths come from the source
    /// contracts and the spectral coefficient count.
    pub fn model_config(&self, spectral: &SpectralConfig) -> Result<ModelConfig> {
        let branches = self
            .feature_set
            .iter()
            .map(|&s| Ok(BranchSpec::new(s, input_dim(s, spectral)?)))
            .collect::<Result<Vec<_>>>()?;
        let cfg = ModelConfig {
            branches,
            conv_filters: self.conv_filters,
            kernel_size: self.kernel_size,
            fcn_dims: self.fcn_dims.clone(),
            dropout_p: self.dropout_p,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Width a source contributes to the model input.
pub fn input_dim(source: FeatureSource, spectral: &SpectralConfig) -> Result<usize> {
    match source {
        FeatureSource::Mfcc | FeatureSource::Lfcc => Ok(spectral.n_coeffs),
        FeatureSource::Trillsson | FeatureSource::Xvector => {
            Ok(source.contract_dim().expect("neural sources have fixed widths"))
        }
        FeatureSource::Other => Err(Error::UnsupportedSource(source)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub rmse: f64,
    pub n: usize,
    pub feature_set: Vec<FeatureSource>,
    pub model_version: String,
}

/// Mixes to mono and resamples to the model rate.
pub fn to_model_rate(clip: AudioClip) -> Result<AudioClip> {
    let mono = to_mono(clip);
    Ok(resample(&mono, MODEL_SAMPLE_RATE)?)
}

/// Extracts pooled MFCC/LFCC vectors from already-prepared 16 kHz mono audio.
#[derive(Debug, Clone)]
pub struct SpectralFrontEnd {
    mfcc: CepstralExtractor,
    lfcc: CepstralExtractor,
}

impl SpectralFrontEnd {
    pub fn new(cfg: &SpectralConfig) -> Result<Self> {
        let build = |s| {
            let c = cfg.for_source(s).expect("spectral source");
            CepstralExtractor::new(c)
        };
        Ok(Self {
            mfcc: build(FeatureSource::Mfcc)?,
            lfcc: build(FeatureSource::Lfcc)?,
        })
    }

    pub fn extractor(&self, source: FeatureSource) -> Option<&CepstralExtractor> {
        match source {
            FeatureSource::Mfcc => Some(&self.mfcc),
            FeatureSource::Lfcc => Some(&self.lfcc),
            _ => None,
        }
    }

    pub fn pooled(&self, clip: &AudioClip, source: FeatureSource) -> Result<FeatureVector> {
        let extractor = self.extractor(source).ok_or(Error::UnsupportedSource(source))?;
        let frames = extractor.extract(clip)?;
        Ok(temporal_mean_pool(&frames, source)?)
    }
}

fn read_artifact(entry: &ManifestEntry, feature: FeatureSource, path: Option<&Path>) -> Result<Vec<u8>> {
    let missing = || Error::MissingArtifact {
        id: entry.id.clone(),
        feature,
        path: path.map(Path::to_path_buf),
    };
    let path = path.ok_or_else(missing)?;
    match fs::read(path) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(missing()),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// Per-branch inputs for one utterance, in `feature_set` order.
pub fn assemble_with(
    entry: &ManifestEntry,
    feature_set: &[FeatureSource],
    front_end: &SpectralFrontEnd,
) -> Result<Vec<FeatureVector>> {
    let mut audio: Option<AudioClip> = None;
    let mut out = Vec::with_capacity(feature_set.len());
    for &source in feature_set {
        let v = match source {
            FeatureSource::Mfcc | FeatureSource::Lfcc => {
                if audio.is_none() {
                    let bytes = read_artifact(entry, source, entry.audio_path.as_deref())?;
                    audio = Some(to_model_rate(decode_wav(&bytes)?)?);
                }
                front_end.pooled(audio.as_ref().expect("decoded above"), source)?
            }
            FeatureSource::Trillsson | FeatureSource::Xvector => {
                let path = entry.embedding_paths.get(&source).map(|p| p.as_path());
                let bytes = read_artifact(entry, source, path)?;
                load_embedding(&bytes, source)?
            }
            FeatureSource::Other => return Err(Error::UnsupportedSource(source)),
        };
        out.push(v);
    }
    Ok(out)
}

pub fn assemble_features(
    entry: &ManifestEntry,
    feature_set: &[FeatureSource],
    spectral: &SpectralConfig,
) -> Result<Vec<FeatureVector>> {
    assemble_with(entry, feature_set, &SpectralFrontEnd::new(spectral)?)
}

/// Assembles every entry in parallel; output order follows `entries`.
pub fn assemble_samples(
    entries: &[ManifestEntry],
    feature_set: &[FeatureSource],
    spectral: &SpectralConfig,
) -> Result<Vec<Sample>> {
    let front_end = SpectralFrontEnd::new(spectral)?;
    entries
        .par_iter()
        .map(|e| {
            Ok(Sample {
                inputs: assemble_with(e, feature_set, &front_end)?,
                target: e.score,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FusionModel,
    pub log: Vec<EpochLog>,
    pub train_ids: Vec<String>,
    pub dev_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

impl TrainOutcome {
    /// Training log as JSON lines `{epoch, train_mse, dev_mae, dev_rmse}`.
    pub fn log_jsonl(&self) -> String {
        log_jsonl(&self.log)
    }
}

pub fn log_jsonl(log: &[EpochLog]) -> String {
    log.iter()
        .map(|e| serde_json::to_string(e).expect("epoch log serializes") + "\n")
        .collect()
}

/// Splits the manifest by `cfg.seed`, assembles features and trains.
pub fn train_from_manifest(
    entries: &[ManifestEntry],
    cfg: &TrainConfig,
    spectral: &SpectralConfig,
) -> Result<TrainOutcome> {
    let model_cfg = cfg.model_config(spectral)?;
    let (train_set, dev_set, test_set) =
        split_dataset(entries, cfg.split_ratios.0, cfg.split_ratios.1, cfg.seed)?;
    let ids = |v: &[ManifestEntry]| v.iter().map(|e| e.id.clone()).collect::<Vec<_>>();
    let train_samples = if cfg.epochs == 0 {
        Vec::new()
    } else {
        assemble_samples(&train_set, &cfg.feature_set, spectral)?
    };
    let dev_samples = if cfg.epochs == 0 {
        Vec::new()
    } else {
        assemble_samples(&dev_set, &cfg.feature_set, spectral)?
    };
    let (model, log) = train::train(model_cfg, &train_samples, &dev_samples, &cfg.options())?;
    Ok(TrainOutcome {
        model,
        log,
        train_ids: ids(&train_set),
        dev_ids: ids(&dev_set),
        test_ids: ids(&test_set),
    })
}

/// Version tag of an in-memory model, derived from its serialized weights.
pub fn version_of(model: &FusionModel) -> String {
    model_version(&weights_digest(&save_weights(model)))
}

/// Inference-mode MAE/RMSE over `samples`, no clamping.
pub fn evaluate_samples(model: &FusionModel, samples: &[Sample], version: String) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let preds = samples
        .iter()
        .map(|s| model.predict(&s.inputs))
        .collect::<Result<Vec<_>, _>>()?;
    let targets: Vec<f64> = samples.iter().map(|s| s.target).collect();
    let m = evaluate_predictions(&preds, &targets)?;
    Ok(EvalReport {
        mae: m.mae,
        rmse: m.rmse,
        n: m.n,
        feature_set: model.feature_set(),
        model_version: version,
    })
}

pub fn evaluate(
    model: &FusionModel,
    entries: &[ManifestEntry],
    spectral: &SpectralConfig,
) -> Result<EvalReport> {
    if entries.is_empty() {
        return Err(Error::Empty);
    }
    let samples = assemble_samples(entries, &model.feature_set(), spectral)?;
    evaluate_samples(model, &samples, version_of(model))
}
