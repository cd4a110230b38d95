//! Orthonormal DCT-II and its inverse (DCT-III).

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Precomputed orthonormal DCT-II basis for a fixed length.
#[derive(Debug, Clone)]
pub struct Dct {
    len: usize,
    // basis[k * len + n] = s_k * cos(pi * (n + 0.5) * k / len)
    basis: Vec<f64>,
}

impl Dct {
    pub fn new(len: usize) -> Self {
        let mut basis = Vec::with_capacity(len * len);
        let n_f = len as f64;
        for k in 0..len {
            let scale = if k == 0 {
                libm::sqrt(1.0 / n_f)
            } else {
                libm::sqrt(2.0 / n_f)
            };
            for n in 0..len {
                basis.push(scale * libm::cos(PI * (n as f64 + 0.5) * k as f64 / n_f));
            }
        }
        Self { len, basis }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// First `n_out` DCT-II coefficients of `input`.
    pub fn forward_truncated(&self, input: &[f64], n_out: usize) -> Vec<f64> {
        assert_eq!(input.len(), self.len);
        self.basis
            .chunks_exact(self.len)
            .take(n_out)
            .map(|row| row.iter().zip(input).map(|(b, x)| b * x).sum())
            .collect()
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_truncated(input, self.len)
    }

    /// DCT-III with matching normalization, the exact inverse of [`Dct::forward`].
    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.len);
        (0..self.len)
            .map(|n| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * self.basis[k * self.len + n])
                    .sum()
            })
            .collect()
    }
}

pub fn dct2_orthonormal(input: &[f64]) -> Vec<f64> {
    Dct::new(input.len()).forward(input)
}

pub fn dct3_orthonormal(coeffs: &[f64]) -> Vec<f64> {
    Dct::new(coeffs.len()).inverse(coeffs)
}
