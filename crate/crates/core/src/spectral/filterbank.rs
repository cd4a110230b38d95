//! Triangular filterbanks on the mel or linear frequency axis.

use alloc::vec;
use alloc::vec::Vec;

use super::{FilterScale, SpectralConfig, SpectralError};

type Warp = fn(f64) -> f64;

pub fn hz_to_mel(hz: f64) -> f64 {
    1127.0 * libm::log(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::exp(mel / 1127.0) - 1.0)
}

/// `n_filters × (n_fft/2 + 1)` weight matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    n_filters: usize,
    n_bins: usize,
    weights: Vec<f64>,
    centers_hz: Vec<f64>,
}

impl FilterBank {
    pub fn n_filters(&self) -> usize {
        self.n_filters
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn row(&self, filter: usize) -> &[f64] {
        &self.weights[filter * self.n_bins..(filter + 1) * self.n_bins]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks_exact(self.n_bins)
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Filter energies `W · power`.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        debug_assert_eq!(power.len(), self.n_bins);
        self.rows()
            .map(|row| row.iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }
}

/// Builds `n_filters` triangles whose `n_filters + 2` edge points are equally
/// spaced (in mel or Hz) from 0 to Nyquist. Each row is scaled so its largest
/// weight is exactly 1.0.
pub fn build_filterbank(cfg: &SpectralConfig, sample_rate: u32) -> Result<FilterBank, SpectralError> {
    cfg.validate()?;
    if sample_rate == 0 {
        return Err(SpectralError::BadSampleRate);
    }
    let nyquist = f64::from(sample_rate) / 2.0;
    let (warp, unwarp): (Warp, Warp) = match cfg.scale {
        FilterScale::Mel => (hz_to_mel, mel_to_hz),
        FilterScale::Linear => (|f| f, |f| f),
    };
    let top = warp(nyquist);
    let steps = (cfg.n_filters + 1) as f64;
    let edges: Vec<f64> = (0..cfg.n_filters + 2)
        .map(|i| unwarp(top * i as f64 / steps))
        .collect();

    let n_bins = cfg.n_fft / 2 + 1;
    let bin_hz = f64::from(sample_rate) / cfg.n_fft as f64;
    let mut weights = vec![0.0; cfg.n_filters * n_bins];
    for (filter, row) in weights.chunks_exact_mut(n_bins).enumerate() {
        let (left, center, right) = (edges[filter], edges[filter + 1], edges[filter + 2]);
        for (bin, w) in row.iter_mut().enumerate() {
            let f = bin as f64 * bin_hz;
            *w = if f <= left || f >= right {
                0.0
            } else if f <= center {
                (f - left) / (center - left)
            } else {
                (right - f) / (right - center)
            };
        }
        let peak = row.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(SpectralError::EmptyFilter(filter));
        }
        for w in row.iter_mut() {
            *w /= peak;
        }
    }

    Ok(FilterBank {
        n_filters: cfg.n_filters,
        n_bins,
        weights,
        centers_hz: edges[1..=cfg.n_filters].to_vec(),
    })
}
