use alloc::vec::Vec;

use rand::Rng;

use super::NetError;

/// Whether stochastic layers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Valid, stride-1, single-input-channel convolution without activation.
///
/// `weights` is `filters × kernel`, row-major. Returns `filters × (len - kernel + 1)`.
pub fn conv1d_linear(
    input: &[f64],
    weights: &[f64],
    biases: &[f64],
    kernel: usize,
) -> Result<Vec<f64>, NetError> {
    if kernel == 0 || weights.len() != biases.len() * kernel {
        return Err(NetError::ShapeMismatch);
    }
    if input.len() < kernel {
        return Err(NetError::InputTooShort {
            len: input.len(),
            kernel,
        });
    }
    let positions = input.len() - kernel + 1;
    let mut out = Vec::with_capacity(biases.len() * positions);
    for (w, b) in weights.chunks_exact(kernel).zip(biases) {
        out.extend(
            input
                .windows(kernel)
                .map(|win| b + win.iter().zip(w).map(|(x, wk)| x * wk).sum::<f64>()),
        );
    }
    Ok(out)
}

/// [`conv1d_linear`] followed by ReLU.
pub fn conv1d(input: &[f64], weights: &[f64], biases: &[f64], kernel: usize) -> Result<Vec<f64>, NetError> {
    let mut out = conv1d_linear(input, weights, biases, kernel)?;
    for v in &mut out {
        *v = v.max(0.0);
    }
    Ok(out)
}

/// Per-row maximum of a `rows × width` map along with the winning position.
/// Ties go to the lowest index.
pub fn global_max_pool(map: &[f64], width: usize) -> Vec<(f64, usize)> {
    assert!(width > 0 && map.len().is_multiple_of(width));
    map.chunks_exact(width)
        .map(|row| {
            row.iter().enumerate().fold(
                (row[0], 0),
                |best, (i, &v)| if v > best.0 { (v, i) } else { best },
            )
        })
        .collect()
}

/// Inverted-dropout multipliers: 0 with probability `p`, else `1 / (1 - p)`.
pub fn dropout_mask<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Result<Vec<f64>, NetError> {
    if !(0.0..1.0).contains(&p) {
        return Err(NetError::BadProbability(p));
    }
    let keep = 1.0 / (1.0 - p);
    Ok((0..len)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect())
}

pub fn dropout<R: Rng + ?Sized>(v: &[f64], p: f64, mode: Mode, rng: &mut R) -> Result<Vec<f64>, NetError> {
    if !(0.0..1.0).contains(&p) {
        return Err(NetError::BadProbability(p));
    }
    if mode == Mode::Infer || p == 0.0 {
        return Ok(v.to_vec());
    }
    let mask = dropout_mask(v.len(), p, rng)?;
    Ok(v.iter().zip(mask).map(|(x, m)| x * m).collect())
}

pub fn mse_loss(preds: &[f64], targets: &[f64]) -> Result<f64, NetError> {
    if preds.len() != targets.len() {
        return Err(NetError::LengthMismatch);
    }
    if preds.is_empty() {
        return Err(NetError::EmptyBatch);
    }
    let sum: f64 = preds.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / preds.len() as f64)
}
