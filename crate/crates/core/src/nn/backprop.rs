//! Forward pass with cached activations and exact reverse-mode gradients.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::layers::{conv1d, dropout_mask, global_max_pool};
use super::model::{FusionModel, Parameters};
use super::NetError;

/// Activations recorded by one forward pass, enough to run the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Per branch, per filter: pooled post-ReLU value and its position.
    pooled: Vec<Vec<(f64, usize)>>,
    /// Input to each hidden layer and finally to the head.
    layer_inputs: Vec<Vec<f64>>,
    /// Pre-activations of each hidden layer.
    pre_activations: Vec<Vec<f64>>,
    /// Dropout multipliers after each hidden layer, if dropout ran.
    masks: Vec<Option<Vec<f64>>>,
    prediction: f64,
}

impl ForwardTrace {
    pub fn prediction(&self) -> f64 {
        self.prediction
    }

    /// Concatenated pooled branch outputs.
    pub fn fused(&self) -> &[f64] {
        &self.layer_inputs[0]
    }

    /// Which side of every ReLU and max-pool decision this pass landed on.
    /// Two passes with equal patterns lie on the same smooth piece of the
    /// loss surface.
    pub fn activation_pattern(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for branch in &self.pooled {
            for &(v, idx) in branch {
                out.push(((idx as u64) << 1) | u64::from(v > 0.0));
            }
        }
        for z in &self.pre_activations {
            out.extend(z.iter().map(|v| u64::from(*v > 0.0)));
        }
        out
    }
}

/// Runs the network. Dropout is applied only when `rng` is given and the
/// model's dropout probability is positive.
pub(crate) fn forward<S: AsRef<[f64]>, R: Rng + ?Sized>(
    model: &FusionModel,
    inputs: &[S],
    mut rng: Option<&mut R>,
) -> Result<ForwardTrace, NetError> {
    let cfg = model.config();
    let params = model.params();
    if inputs.len() != cfg.branches.len() {
        return Err(NetError::BranchMismatch("wrong number of inputs"));
    }

    let mut fused = Vec::with_capacity(cfg.fused_dim());
    let mut pooled = Vec::with_capacity(inputs.len());
    for ((input, spec), conv) in inputs.iter().zip(&cfg.branches).zip(&params.convs) {
        let input = input.as_ref();
        if input.len() != spec.input_dim {
            return Err(NetError::BranchMismatch("input width differs from branch config"));
        }
        let map = conv1d(input, &conv.weights, &conv.biases, cfg.kernel_size)?;
        let pool = global_max_pool(&map, input.len() - cfg.kernel_size + 1);
        fused.extend(pool.iter().map(|p| p.0));
        pooled.push(pool);
    }

    let mut layer_inputs = Vec::with_capacity(params.hidden.len() + 1);
    let mut pre_activations = Vec::with_capacity(params.hidden.len());
    let mut masks = Vec::with_capacity(params.hidden.len());
    let mut x = fused;
    for layer in &params.hidden {
        let z = layer.apply(&x);
        let mut a: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
        let mask = match rng.as_deref_mut() {
            Some(rng) if cfg.dropout_p > 0.0 => Some(dropout_mask(a.len(), cfg.dropout_p, rng)?),
            _ => None,
        };
        if let Some(mask) = &mask {
            for (v, m) in a.iter_mut().zip(mask) {
                *v *= m;
            }
        }
        layer_inputs.push(core::mem::replace(&mut x, a));
        pre_activations.push(z);
        masks.push(mask);
    }
    let prediction = params.head.apply(&x)[0];
    layer_inputs.push(x);

    Ok(ForwardTrace {
        pooled,
        layer_inputs,
        pre_activations,
        masks,
        prediction,
    })
}

/// Accumulates `d_pred * ∂pred/∂θ` into `grads`.
fn backward<S: AsRef<[f64]>>(
    model: &FusionModel,
    inputs: &[S],
    trace: &ForwardTrace,
    d_pred: f64,
    grads: &mut Parameters,
) {
    let cfg = model.config();
    let params = model.params();

    // head
    let head_in = trace.layer_inputs.last().expect("head input recorded");
    for (g, x) in grads.head.weights.iter_mut().zip(head_in) {
        *g += d_pred * x;
    }
    grads.head.biases[0] += d_pred;
    let mut d_x: Vec<f64> = params.head.weights.iter().map(|w| d_pred * w).collect();

    for (i, layer) in params.hidden.iter().enumerate().rev() {
        let z = &trace.pre_activations[i];
        let x_in = &trace.layer_inputs[i];
        let mut d_z = d_x;
        for (j, dz) in d_z.iter_mut().enumerate() {
            if let Some(mask) = &trace.masks[i] {
                *dz *= mask[j];
            }
            if z[j] <= 0.0 {
                *dz = 0.0;
            }
        }
        let g = &mut grads.hidden[i];
        let mut d_in = vec![0.0; layer.inputs];
        for (o, &dz) in d_z.iter().enumerate() {
            g.biases[o] += dz;
            if dz == 0.0 {
                continue;
            }
            let w_row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            let g_row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for ((gw, x), (di, w)) in g_row.iter_mut().zip(x_in).zip(d_in.iter_mut().zip(w_row)) {
                *gw += dz * x;
                *di += dz * w;
            }
        }
        d_x = d_in;
    }

    // pooled conv outputs: only the argmax position of an active filter carries gradient
    let k = cfg.kernel_size;
    for (b, (input, pool)) in inputs.iter().zip(&trace.pooled).enumerate() {
        let input = input.as_ref();
        let g = &mut grads.convs[b];
        for (f, &(value, pos)) in pool.iter().enumerate() {
            let d = d_x[b * cfg.conv_filters + f];
            if value <= 0.0 || d == 0.0 {
                continue;
            }
            g.biases[f] += d;
            for (gw, x) in g.weights[f * k..(f + 1) * k].iter_mut().zip(&input[pos..pos + k]) {
                *gw += d * x;
            }
        }
    }
}

/// Mean squared error over `batch` and its exact gradient.
///
/// With `rng`, each sample draws fresh dropout masks that are reused by its
/// backward pass, so the gradient is that of the realized loss. Samples are
/// accumulated in batch order.
pub fn loss_and_gradients<S: AsRef<[f64]>, R: Rng + ?Sized>(
    model: &FusionModel,
    batch: &[(&[S], f64)],
    mut rng: Option<&mut R>,
) -> Result<(f64, Parameters), NetError> {
    if batch.is_empty() {
        return Err(NetError::EmptyBatch);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grads = model.params().zeros_like();
    let mut loss = 0.0;
    for &(inputs, target) in batch {
        let trace = forward(model, inputs, rng.as_deref_mut())?;
        let residual = trace.prediction - target;
        loss += residual * residual;
        backward(model, inputs, &trace, 2.0 * residual * scale, &mut grads);
    }
    Ok((loss * scale, grads))
}

impl FusionModel {
    /// Forward pass keeping activations. Dropout runs only when `rng` is given.
    pub fn trace<S: AsRef<[f64]>, R: Rng + ?Sized>(
        &self,
        inputs: &[S],
        rng: Option<&mut R>,
    ) -> Result<ForwardTrace, NetError> {
        forward(self, inputs, rng)
    }
}
