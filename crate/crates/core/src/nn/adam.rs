use alloc::vec;
use alloc::vec::Vec;

use super::model::Parameters;
use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for a list of tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub hyper: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(shapes: &[usize], hyper: AdamConfig) -> Self {
        Self {
            hyper,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_parameters(params: &Parameters, hyper: AdamConfig) -> Self {
        Self::new(&params.shapes(), hyper)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// One update `θ ← θ - lr · m̂ / (√v̂ + ε)`.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<(), NetError> {
        let shapes_match = params.len() == self.m.len()
            && grads.len() == self.m.len()
            && params
                .iter()
                .zip(grads)
                .zip(&self.m)
                .all(|((p, g), m)| p.len() == m.len() && g.len() == m.len());
        if !shapes_match {
            return Err(NetError::ShapeMismatch);
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.hyper;
        let t = self.step as f64;
        let bias1 = 1.0 - libm::pow(beta1, t);
        let bias2 = 1.0 - libm::pow(beta2, t);
        for (((theta, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..theta.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                theta[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
            }
        }
        Ok(())
    }

    pub fn step_parameters(&mut self, params: &mut Parameters, grads: &Parameters) -> Result<(), NetError> {
        let grads = grads.tensors();
        self.step(&mut params.tensors_mut(), &grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_step(theta: f64, g: f64) -> f64 {
        let mut state = AdamState::new(&[1], AdamConfig::default());
        let mut p = [theta];
        state.step(&mut [&mut p], &[&[g]]).unwrap();
        p[0]
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut state = AdamState::new(&[3], AdamConfig::default());
        let mut p = [1.0, -2.0, 0.5];
        state.step(&mut [&mut p], &[&[0.0; 3]]).unwrap();
        assert_eq!(p, [1.0, -2.0, 0.5]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_closed_form() {
        let theta = scalar_step(0.0, 0.5);
        let expected = -1e-3 * 0.5 / (0.5 + 1e-8);
        assert!((theta - expected).abs() < 1e-12);
        assert!((theta - -9.9999998e-4).abs() < 1e-11);
    }

    #[test]
    fn first_step_ignores_gradient_scale() {
        let a = scalar_step(0.0, 0.5);
        let b = scalar_step(0.0, 5.0);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn descends_on_quadratic() {
        // L(θ) = (θ - 3)^2
        let mut state = AdamState::new(
            &[1],
            AdamConfig {
                lr: 1e-2,
                ..Default::default()
            },
        );
        let mut p = [0.0];
        let mut prev = 9.0;
        for _ in 0..50 {
            let g = 2.0 * (p[0] - 3.0);
            state.step(&mut [&mut p], &[&[g]]).unwrap();
            let loss = (p[0] - 3.0) * (p[0] - 3.0);
            assert!(loss < prev);
            prev = loss;
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut state = AdamState::new(&[2], AdamConfig::default());
        let mut p = [0.0; 3];
        assert_eq!(
            state.step(&mut [&mut p], &[&[0.0; 3]]),
            Err(NetError::ShapeMismatch)
        );
        assert_eq!(state.step_count(), 0);
    }
}
