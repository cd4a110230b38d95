#![allow(dead_code)]

use comfeat_core::feature::FeatureSource;
use comfeat_core::nn::{BranchSpec, FusionModel, ModelConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Central-difference oracle for the batch MSE, evaluated through inference
/// only. Returns `None` when the ±h probes land on different sides of a
/// ReLU or max-pool decision (the loss is not differentiable there).
pub fn numeric_gradient(
    model: &FusionModel,
    batch: &[(Vec<Vec<f64>>, f64)],
    index: usize,
    h: f64,
) -> Option<f64> {
    let probe = |delta: f64| {
        let mut m = model.clone();
        let theta = m.params().get_flat(index).unwrap();
        m.params_mut().set_flat(index, theta + delta);
        let mut loss = 0.0;
        let mut pattern = Vec::new();
        for (inputs, target) in batch {
            let trace = m.trace(inputs, None::<&mut ChaCha8Rng>).unwrap();
            let r = trace.prediction() - target;
            loss += r * r;
            pattern.extend(trace.activation_pattern());
        }
        (loss / batch.len() as f64, pattern)
    };
    let (plus, p_plus) = probe(h);
    let (minus, p_minus) = probe(-h);
    (p_plus == p_minus).then(|| (plus - minus) / (2.0 * h))
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-7 {
        // both vanish: compare absolutely
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

pub fn random_config(rng: &mut ChaCha8Rng) -> ModelConfig {
    let kernel = rng.gen_range(1..=3);
    let branches = (0..rng.gen_range(1..=3))
        .map(|_| BranchSpec::new(FeatureSource::Other, rng.gen_range(kernel..=10)))
        .collect();
    let fcn_dims = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(2..=6)).collect();
    ModelConfig {
        branches,
        conv_filters: rng.gen_range(1..=5),
        kernel_size: kernel,
        fcn_dims,
        dropout_p: 0.0,
        seed: rng.gen(),
    }
}

pub fn random_batch(cfg: &ModelConfig, rng: &mut ChaCha8Rng, n: usize) -> Vec<(Vec<Vec<f64>>, f64)> {
    (0..n)
        .map(|_| {
            let inputs = cfg
                .branches
                .iter()
                .map(|b| (0..b.input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            (inputs, rng.gen_range(0.0..24.0))
        })
        .collect()
}

/// Direct DFT magnitude spectrum (bins 0..=n/2) of `x`.
pub fn dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let twiddle: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let a = -2.0 * std::f64::consts::PI * j as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            let mut j = 0;
            for v in x {
                re += v * twiddle[j].0;
                im += v * twiddle[j].1;
                j += k;
                if j >= n {
                    j -= n;
                }
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}
