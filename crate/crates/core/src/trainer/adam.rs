use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias-corrected first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<DMatrix<f64>>,
    pub v: Vec<DMatrix<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a DMatrix<f64>>) -> Self {
        let m: Vec<_> = params.into_iter().map(|p| DMatrix::zeros(p.nrows(), p.ncols())).collect();
        Self { config, v: m.clone(), m, t: 0 }
    }

    pub fn step(&mut self, params: &mut [DMatrix<f64>], grads: &[DMatrix<f64>]) -> Result<(), TrainError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(TrainError::ParamCount { expected: self.m.len(), got: params.len().min(grads.len()) });
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != m.shape() || g.shape() != m.shape() {
                return Err(TrainError::Shape { expected: m.shape(), got: g.shape() });
            }
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.t += 1;
        let bc1 = 1.0 - beta1.powf(self.t as f64);
        let bc2 = 1.0 - beta2.powf(self.t as f64);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for idx in 0..p.len() {
                let gi = g[idx];
                m[idx] = beta1 * m[idx] + (1.0 - beta1) * gi;
                v[idx] = beta2 * v[idx] + (1.0 - beta2) * gi * gi;
                let m_hat = m[idx] / bc1;
                let v_hat = v[idx] / bc2;
                p[idx] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn first_step_hand_values() {
        let mut params = vec![scalar(1.0)];
        let mut adam = AdamState::new(AdamConfig::default(), &params);
        adam.step(&mut params, &[scalar(0.2)]).unwrap();
        assert!((adam.m[0][0] - 0.02).abs() < 1e-15);
        assert!((adam.v[0][0] - 4e-5).abs() < 1e-18);
        assert!((params[0][0] - (1.0 - 0.001 * 0.2 / (0.2 + 1e-8))).abs() < 1e-15);
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut params = vec![scalar(0.7), DMatrix::from_element(2, 3, -1.0)];
        let before = params.clone();
        let mut adam = AdamState::new(AdamConfig::default(), &params);
        let zeros: Vec<_> = params.iter().map(|p| DMatrix::zeros(p.nrows(), p.ncols())).collect();
        for _ in 0..5 {
            adam.step(&mut params, &zeros).unwrap();
        }
        assert_eq!(params, before);
    }

    #[test]
    fn first_step_magnitude_is_lr() {
        for g in [0.01, 10.0] {
            let mut params = vec![scalar(0.0)];
            let mut adam = AdamState::new(AdamConfig::default(), &params);
            adam.step(&mut params, &[scalar(g)]).unwrap();
            assert!((params[0][0].abs() - 1e-3).abs() < 1e-8, "g = {g}");
        }
    }

    #[test]
    fn shape_errors() {
        let mut params = vec![scalar(0.0)];
        let mut adam = AdamState::new(AdamConfig::default(), &params);
        assert!(adam.step(&mut params, &[DMatrix::zeros(2, 1)]).is_err());
        assert!(adam.step(&mut params, &[]).is_err());
    }
}
