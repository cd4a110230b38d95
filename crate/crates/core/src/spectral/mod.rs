//! MFCC and LFCC extraction.
//!
//! Per frame: Hamming window, zero-padded power spectrum, triangular
//! filterbank, natural log with a floor, orthonormal DCT-II truncated to
//! `n_coeffs`. The two cepstra differ only in how the filter edges are spaced.
//! c0 is kept in both.

mod dct;
mod fft;
mod filterbank;

use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::audio::{AudioClip, MODEL_SAMPLE_RATE};
use crate::feature::{FeatureError, FeatureSource, FeatureVector};

pub use dct::{dct2_orthonormal, dct3_orthonormal, Dct};
pub use fft::power_spectrum;
pub use filterbank::{build_filterbank, hz_to_mel, mel_to_hz, FilterBank};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("invalid spectral configuration: {0}")]
    BadConfig(&'static str),
    #[error("n_fft {n_fft} must be a power of two no shorter than the frame ({frame_len})")]
    BadFftSize { n_fft: usize, frame_len: usize },
    #[error("sample rate must be positive")]
    BadSampleRate,
    #[error("filter {0} covers no FFT bin")]
    EmptyFilter(usize),
    #[error("signal has {got} samples, need at least {need} for one frame")]
    TooShort { got: usize, need: usize },
    #[error("cepstral features need mono audio at {MODEL_SAMPLE_RATE} Hz")]
    WrongInputFormat,
    #[error("cannot pool a matrix with no frames")]
    EmptyMatrix,
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterScale {
    Mel,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub n_fft: usize,
    pub n_filters: usize,
    pub n_coeffs: usize,
    pub scale: FilterScale,
    pub log_floor: f64,
}

impl Default for SpectralConfig {
    /// 25 ms frames, 10 ms hop, 512-point FFT, 40 mel filters, 20 coefficients.
    fn default() -> Self {
        Self {
            frame_len: 400,
            hop: 160,
            n_fft: 512,
            n_filters: 40,
            n_coeffs: 20,
            scale: FilterScale::Mel,
            log_floor: 1e-10,
        }
    }
}

impl SpectralConfig {
    pub fn mfcc() -> Self {
        Self::default()
    }

    pub fn lfcc() -> Self {
        Self {
            scale: FilterScale::Linear,
            ..Self::default()
        }
    }

    /// Same framing parameters with the filter spacing that `source` needs.
    /// Returns `None` for non-spectral sources.
    pub fn for_source(&self, source: FeatureSource) -> Option<Self> {
        let scale = match source {
            FeatureSource::Mfcc => FilterScale::Mel,
            FeatureSource::Lfcc => FilterScale::Linear,
            _ => return None,
        };
        Some(Self {
            scale,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(SpectralError::BadConfig("need 0 < hop <= frame_len"));
        }
        if self.frame_len < 2 {
            return Err(SpectralError::BadConfig("frame_len must be at least 2"));
        }
        if self.frame_len > self.n_fft || !self.n_fft.is_power_of_two() {
            return Err(SpectralError::BadFftSize {
                n_fft: self.n_fft,
                frame_len: self.frame_len,
            });
        }
        if self.n_coeffs == 0 || self.n_coeffs > self.n_filters {
            return Err(SpectralError::BadConfig("need 0 < n_coeffs <= n_filters"));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return Err(SpectralError::BadConfig("log_floor must be positive"));
        }
        Ok(())
    }

    /// Number of frames a signal of `n_samples` produces.
    pub fn frame_count(&self, n_samples: usize) -> Option<usize> {
        (n_samples >= self.frame_len).then(|| (n_samples - self.frame_len) / self.hop + 1)
    }
}

/// Row-major `frames × coeffs_per_frame` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    frames: usize,
    coeffs_per_frame: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(frames: usize, coeffs_per_frame: usize, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != frames * coeffs_per_frame {
            return Err(SpectralError::BadConfig(
                "matrix shape does not match value count",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite.into());
        }
        Ok(Self {
            frames,
            coeffs_per_frame,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, SpectralError> {
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(SpectralError::BadConfig("rows have unequal lengths"));
        }
        let values = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(rows.len(), width, values)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn coeffs_per_frame(&self) -> usize {
        self.coeffs_per_frame
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        &self.values[frame * self.coeffs_per_frame..(frame + 1) * self.coeffs_per_frame]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.values.chunks_exact(self.coeffs_per_frame.max(1))
    }
}

/// `w[n] = 0.54 - 0.46 cos(2πn / (len - 1))`
pub fn hamming_window(len: usize) -> Vec<f64> {
    let denom = (len.max(2) - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * libm::cos(2.0 * PI * n as f64 / denom))
        .collect()
}

/// Slices `samples` into overlapping Hamming-windowed frames.
pub fn frame_signal(samples: &[f64], cfg: &SpectralConfig) -> Result<FeatureMatrix, SpectralError> {
    cfg.validate()?;
    let frames = cfg.frame_count(samples.len()).ok_or(SpectralError::TooShort {
        got: samples.len(),
        need: cfg.frame_len,
    })?;
    let window = hamming_window(cfg.frame_len);
    let mut values = Vec::with_capacity(frames * cfg.frame_len);
    for f in 0..frames {
        let start = f * cfg.hop;
        let frame = &samples[start..start + cfg.frame_len];
        values.extend(frame.iter().zip(&window).map(|(s, w)| s * w));
    }
    FeatureMatrix::new(frames, cfg.frame_len, values)
}

/// Reusable extractor holding the filterbank and DCT basis for one config.
#[derive(Debug, Clone)]
pub struct CepstralExtractor {
    cfg: SpectralConfig,
    filterbank: FilterBank,
    dct: Dct,
}

impl CepstralExtractor {
    pub fn new(cfg: SpectralConfig) -> Result<Self, SpectralError> {
        let filterbank = build_filterbank(&cfg, MODEL_SAMPLE_RATE)?;
        let dct = Dct::new(cfg.n_filters);
        Ok(Self { cfg, filterbank, dct })
    }

    pub fn config(&self) -> &SpectralConfig {
        &self.cfg
    }

    /// Cepstra of a single windowed frame.
    pub fn frame_cepstrum(&self, windowed: &[f64]) -> Result<Vec<f64>, SpectralError> {
        let power = power_spectrum(windowed, self.cfg.n_fft)?;
        let log_energies: Vec<f64> = self
            .filterbank
            .apply(&power)
            .into_iter()
            .map(|e| libm::log(e.max(self.cfg.log_floor)))
            .collect();
        Ok(self.dct.forward_truncated(&log_energies, self.cfg.n_coeffs))
    }

    pub fn extract_samples(&self, samples: &[f64]) -> Result<FeatureMatrix, SpectralError> {
        let frames = frame_signal(samples, &self.cfg)?;
        let mut values = Vec::with_capacity(frames.frames() * self.cfg.n_coeffs);
        for frame in frames.rows() {
            values.extend(self.frame_cepstrum(frame)?);
        }
        FeatureMatrix::new(frames.frames(), self.cfg.n_coeffs, values)
    }

    pub fn extract(&self, clip: &AudioClip) -> Result<FeatureMatrix, SpectralError> {
        if clip.sample_rate() != MODEL_SAMPLE_RATE {
            return Err(SpectralError::WrongInputFormat);
        }
        let samples = clip.samples().map_err(|_| SpectralError::WrongInputFormat)?;
        self.extract_samples(samples)
    }
}

/// Frame-level cepstral coefficients of a 16 kHz mono clip.
pub fn cepstral_features(clip: &AudioClip, cfg: &SpectralConfig) -> Result<FeatureMatrix, SpectralError> {
    CepstralExtractor::new(cfg.clone())?.extract(clip)
}

/// Column-wise mean over frames.
pub fn temporal_mean_pool(m: &FeatureMatrix, source: FeatureSource) -> Result<FeatureVector, SpectralError> {
    if m.frames() == 0 {
        return Err(SpectralError::EmptyMatrix);
    }
    let mut sums = alloc::vec![0.0; m.coeffs_per_frame()];
    for row in m.rows() {
        for (acc, v) in sums.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let n = m.frames() as f64;
    for v in &mut sums {
        *v /= n;
    }
    Ok(FeatureVector::new(source, sums)?)
}
