//! Deterministic splits and the mini-batch Adam training loop.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature::FeatureVector;
use crate::metrics::{evaluate_predictions, EvalMetrics, MetricsError};
use crate::nn::{loss_and_gradients, AdamConfig, AdamState, FusionModel, ModelConfig, NetError};

// Stream ids carved out of the config seed so that initialization,
// shuffling and dropout never share random draws.
const SPLIT_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    Empty,
    #[error("no training samples after the split")]
    NoTrainData,
    #[error("invalid training options: {0}")]
    BadOptions(&'static str),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// One utterance: per-branch inputs in fusion order and its severity label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub inputs: Vec<FeatureVector>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Epochs without a dev-RMSE improvement before stopping; 0 never stops early.
    pub early_stop_patience: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 16,
            lr: 1e-3,
            early_stop_patience: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean realized (dropout-on) loss over the epoch's mini-batches.
    pub train_mse: f64,
    pub dev_mae: Option<f64>,
    pub dev_rmse: Option<f64>,
}

/// Train, dev and test partitions.
pub type Split<T> = (Vec<T>, Vec<T>, Vec<T>);

/// Seeded shuffle, then `floor(n * ratio)` items to train and dev; the rest is test.
pub fn split_dataset<T: Clone>(
    items: &[T],
    train_ratio: f64,
    dev_ratio: f64,
    seed: u64,
) -> Result<Split<T>, TrainError> {
    if items.is_empty() {
        return Err(TrainError::Empty);
    }
    let valid = |r: f64| r > 0.0 && r < 1.0;
    if !valid(train_ratio) || !valid(dev_ratio) || train_ratio + dev_ratio >= 1.0 {
        return Err(TrainError::BadOptions(
            "split ratios must lie in (0, 1) and sum below 1",
        ));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    order.shuffle(&mut rng);

    let n = items.len() as f64;
    // the epsilon keeps e.g. 10 * 0.6 from flooring to 5
    let n_train = libm::floor(n * train_ratio + 1e-9) as usize;
    let n_dev = libm::floor(n * dev_ratio + 1e-9) as usize;
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect::<Vec<T>>();
    Ok((
        pick(&order[..n_train]),
        pick(&order[n_train..n_train + n_dev]),
        pick(&order[n_train + n_dev..]),
    ))
}

pub fn predict_samples(model: &FusionModel, samples: &[Sample]) -> Result<Vec<f64>, NetError> {
    samples.iter().map(|s| model.predict(&s.inputs)).collect()
}

pub fn evaluate_samples(model: &FusionModel, samples: &[Sample]) -> Result<EvalMetrics, TrainError> {
    let preds = predict_samples(model, samples)?;
    let targets: Vec<f64> = samples.iter().map(|s| s.target).collect();
    Ok(evaluate_predictions(&preds, &targets)?)
}

/// Trains a freshly initialized model and returns the weights of the epoch
/// with the lowest dev RMSE (the last epoch when `dev` is empty), plus the
/// per-epoch log.
///
/// Everything random derives from `config.seed`, so identical inputs give
/// bit-identical weights.
pub fn train(
    config: ModelConfig,
    train_set: &[Sample],
    dev_set: &[Sample],
    opts: &TrainOptions,
) -> Result<(FusionModel, Vec<EpochLog>), TrainError> {
    if opts.batch_size == 0 {
        return Err(TrainError::BadOptions("batch_size must be positive"));
    }
    if !(opts.lr > 0.0 && opts.lr.is_finite()) {
        return Err(TrainError::BadOptions("lr must be positive"));
    }
    let mut model = FusionModel::init(config)?;
    if opts.epochs == 0 {
        return Ok((model, Vec::new()));
    }
    if train_set.is_empty() {
        return Err(TrainError::NoTrainData);
    }
    for s in train_set.iter().chain(dev_set) {
        model.check_inputs(&s.inputs)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(model.config().seed);
    rng.set_stream(TRAIN_STREAM);
    let mut adam = AdamState::for_parameters(
        model.params(),
        AdamConfig {
            lr: opts.lr,
            ..AdamConfig::default()
        },
    );

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::with_capacity(opts.epochs);
    let mut best: Option<(f64, FusionModel)> = None;
    let mut stale = 0;

    for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(opts.batch_size) {
            let batch: Vec<(&[FeatureVector], f64)> = chunk
                .iter()
                .map(|&i| (train_set[i].inputs.as_slice(), train_set[i].target))
                .collect();
            let (loss, grads) = loss_and_gradients(&model, &batch, Some(&mut rng))?;
            loss_sum += loss * chunk.len() as f64;
            adam.step_parameters(model.params_mut(), &grads)?;
        }
        let train_mse = loss_sum / train_set.len() as f64;

        let dev = if dev_set.is_empty() {
            None
        } else {
            Some(evaluate_samples(&model, dev_set)?)
        };
        log.push(EpochLog {
            epoch,
            train_mse,
            dev_mae: dev.map(|d| d.mae),
            dev_rmse: dev.map(|d| d.rmse),
        });

        if let Some(dev) = dev {
            match &best {
                Some((best_rmse, _)) if dev.rmse >= *best_rmse => stale += 1,
                _ => {
                    best = Some((dev.rmse, model.clone()));
                    stale = 0;
                }
            }
            if opts.early_stop_patience > 0 && stale >= opts.early_stop_patience {
                break;
            }
        }
    }

    Ok((best.map_or(model, |(_, m)| m), log))
}
