//! Radix-2 FFT and the one-sided power spectrum.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::SpectralError;

/// In-place iterative Cooley-Tukey transform. `re.len()` must be a power of two.
pub(crate) fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two() && im.len() == n);
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let angle = -2.0 * PI / len as f64;
        let half = len / 2;
        for k in 0..half {
            let (wi, wr) = libm::sincos(angle * k as f64);
            for start in (0..n).step_by(len) {
                let a = start + k;
                let b = a + half;
                let tr = re[b] * wr - im[b] * wi;
                let ti = re[b] * wi + im[b] * wr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
        len <<= 1;
    }
}

/// One-sided, unnormalized power `|X_k|^2` for `k = 0..=n_fft/2`. The frame
/// is zero-padded to `n_fft`.
pub fn power_spectrum(frame: &[f64], n_fft: usize) -> Result<Vec<f64>, SpectralError> {
    if !n_fft.is_power_of_two() || frame.len() > n_fft {
        return Err(SpectralError::BadFftSize {
            n_fft,
            frame_len: frame.len(),
        });
    }
    let mut re = vec![0.0; n_fft];
    re[..frame.len()].copy_from_slice(frame);
    let mut im = vec![0.0; n_fft];
    fft_in_place(&mut re, &mut im);
    Ok(re
        .iter()
        .zip(&im)
        .take(n_fft / 2 + 1)
        .map(|(r, i)| r * r + i * i)
        .collect())
}
