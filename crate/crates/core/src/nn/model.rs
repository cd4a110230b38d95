use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backprop;
use super::NetError;
use crate::feature::{FeatureSource, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub source: FeatureSource,
    pub input_dim: usize,
}

impl BranchSpec {
    pub fn new(source: FeatureSource, input_dim: usize) -> Self {
        Self { source, input_dim }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Fusion order: branch `i` owns slots `[i * conv_filters, (i + 1) * conv_filters)`
    /// of the fused vector.
    pub branches: Vec<BranchSpec>,
    pub conv_filters: usize,
    pub kernel_size: usize,
    pub fcn_dims: Vec<usize>,
    pub dropout_p: f64,
    pub seed: u64,
}

impl ModelConfig {
    /// 32 filters of width 3, hidden layers of 256 and 90, dropout 0.2.
    pub fn new(branches: Vec<BranchSpec>) -> Self {
        Self {
            branches,
            conv_filters: 32,
            kernel_size: 3,
            fcn_dims: vec![256, 90],
            dropout_p: 0.2,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.branches.is_empty() {
            return Err(NetError::BadConfig("at least one branch is required"));
        }
        if self.conv_filters == 0 || self.kernel_size == 0 {
            return Err(NetError::BadConfig(
                "conv_filters and kernel_size must be positive",
            ));
        }
        for b in &self.branches {
            if b.input_dim < self.kernel_size {
                return Err(NetError::BadConfig("branch input shorter than the kernel"));
            }
            if !b.source.accepts_dim(b.input_dim) {
                return Err(NetError::BadConfig("branch dim violates its source contract"));
            }
        }
        if self.fcn_dims.is_empty() || self.fcn_dims.contains(&0) {
            return Err(NetError::BadConfig(
                "fcn_dims must be a non-empty list of positive widths",
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(NetError::BadConfig("dropout_p must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn fused_dim(&self) -> usize {
        self.conv_filters * self.branches.len()
    }

    pub fn feature_set(&self) -> Vec<FeatureSource> {
        self.branches.iter().map(|b| b.source).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    /// `filters × kernel`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs × inputs`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseParams {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.biases)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

/// Every trainable tensor of the fusion model.
///
/// Canonical tensor order, used by the optimizer and the weight file: for each
/// branch its conv weights then conv biases; for each hidden layer its weights
/// then biases; finally the head weights and head bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub convs: Vec<ConvParams>,
    pub hidden: Vec<DenseParams>,
    pub head: DenseParams,
}

impl Parameters {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let convs = cfg
            .branches
            .iter()
            .map(|_| ConvParams {
                weights: vec![0.0; cfg.conv_filters * cfg.kernel_size],
                biases: vec![0.0; cfg.conv_filters],
            })
            .collect();
        let mut hidden = Vec::with_capacity(cfg.fcn_dims.len());
        let mut width = cfg.fused_dim();
        for &out in &cfg.fcn_dims {
            hidden.push(DenseParams::zeros(width, out));
            width = out;
        }
        Self {
            convs,
            hidden,
            head: DenseParams::zeros(width, 1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(2 * (self.convs.len() + self.hidden.len() + 1));
        for c in &self.convs {
            out.push(&c.weights);
            out.push(&c.biases);
        }
        for d in self.hidden.iter().chain(core::iter::once(&self.head)) {
            out.push(&d.weights);
            out.push(&d.biases);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * (self.convs.len() + self.hidden.len() + 1));
        for c in &mut self.convs {
            out.push(&mut c.weights);
            out.push(&mut c.biases);
        }
        for d in self.hidden.iter_mut().chain(core::iter::once(&mut self.head)) {
            out.push(&mut d.weights);
            out.push(&mut d.biases);
        }
        out
    }

    pub fn shapes(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Flat view in canonical order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn get_flat(&self, index: usize) -> Option<f64> {
        let mut i = index;
        for t in self.tensors() {
            if i < t.len() {
                return Some(t[i]);
            }
            i -= t.len();
        }
        None
    }

    pub fn set_flat(&mut self, index: usize, value: f64) -> bool {
        let mut i = index;
        for t in self.tensors_mut() {
            if i < t.len() {
                t[i] = value;
                return true;
            }
            i -= t.len();
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    config: ModelConfig,
    params: Parameters,
}

impl FusionModel {
    /// He-uniform weights (bound `sqrt(6 / fan_in)`) and zero biases, drawn from
    /// a ChaCha8 stream seeded with `config.seed` in canonical tensor order.
    pub fn init(config: ModelConfig) -> Result<Self, NetError> {
        config.validate()?;
        let mut params = Parameters::zeros(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut fill = |weights: &mut [f64], fan_in: usize| {
            let bound = libm::sqrt(6.0 / fan_in as f64);
            for w in weights {
                *w = (2.0 * rng.gen::<f64>() - 1.0) * bound;
            }
        };
        for c in &mut params.convs {
            fill(&mut c.weights, config.kernel_size);
        }
        for d in params.hidden.iter_mut().chain(core::iter::once(&mut params.head)) {
            fill(&mut d.weights, d.inputs);
        }
        Ok(Self { config, params })
    }

    /// All-zero parameters.
    pub fn zeros(config: ModelConfig) -> Result<Self, NetError> {
        config.validate()?;
        let params = Parameters::zeros(&config);
        Ok(Self { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: Parameters) -> Result<Self, NetError> {
        config.validate()?;
        if Parameters::zeros(&config).shapes() != params.shapes()
            || params.hidden.len() != config.fcn_dims.len()
        {
            return Err(NetError::ShapeMismatch);
        }
        if !params.is_finite() {
            return Err(NetError::BadConfig("non-finite parameter"));
        }
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Parameters {
        &mut self.params
    }

    pub fn into_parts(self) -> (ModelConfig, Parameters) {
        (self.config, self.params)
    }

    pub fn feature_set(&self) -> Vec<FeatureSource> {
        self.config.feature_set()
    }

    /// Checks count, order, source and width of per-branch inputs.
    pub fn check_inputs(&self, inputs: &[FeatureVector]) -> Result<(), NetError> {
        if inputs.len() != self.config.branches.len() {
            return Err(NetError::BranchMismatch("wrong number of inputs"));
        }
        for (v, b) in inputs.iter().zip(&self.config.branches) {
            if v.source() != b.source {
                return Err(NetError::BranchMismatch("input source differs from branch order"));
            }
        }
        Ok(())
    }

    /// Inference-mode prediction (dropout disabled).
    pub fn predict(&self, inputs: &[FeatureVector]) -> Result<f64, NetError> {
        self.check_inputs(inputs)?;
        let raw: Vec<&[f64]> = inputs.iter().map(FeatureVector::values).collect();
        self.predict_raw(&raw)
    }

    /// Inference on untagged per-branch slices; only widths are checked.
    pub fn predict_raw(&self, inputs: &[&[f64]]) -> Result<f64, NetError> {
        Ok(backprop::forward(self, inputs, None::<&mut ChaCha8Rng>)?.prediction())
    }
}
