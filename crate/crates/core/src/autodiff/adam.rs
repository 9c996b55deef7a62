//! Adam with bias correction.

use super::tensor::Tensor;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamParams {
    /// Shared optimizer settings for every objective.
    pub fn standard() -> Self {
        AdamParams {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// Settings for the density-ratio discriminator.
    pub fn discriminator() -> Self {
        AdamParams {
            learning_rate: 1e-4,
            beta1: 0.5,
            beta2: 0.9,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter moment accumulators plus the step counter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
    pub step_count: u64,
    pub hyper: AdamParams,
}

impl AdamState {
    pub fn new(params: &[Tensor], hyper: AdamParams) -> Self {
        AdamState {
            first_moment: params
                .iter()
                .map(|p| Tensor::zeros(p.shape().to_vec()))
                .collect(),
            second_moment: params
                .iter()
                .map(|p| Tensor::zeros(p.shape().to_vec()))
                .collect(),
            step_count: 0,
            hyper,
        }
    }

    /// One bias-corrected update of `params` in place.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(Error::config(format!(
                "adam: {} params, {} grads, state for {}",
                params.len(),
                grads.len(),
                self.first_moment.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if g.shape() != params[i].shape() {
                return Err(Error::config(format!(
                    "adam: gradient {i} shape {:?} vs parameter shape {:?}",
                    g.shape(),
                    params[i].shape()
                )));
            }
            if !g.all_finite() {
                return Err(Error::Aborted {
                    step: self.step_count,
                    message: format!("non-finite gradient in parameter tensor {i}"),
                });
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let AdamParams {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.hyper;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
        {
            let pd = p.data_mut();
            let md = m.data_mut();
            let vd = v.data_mut();
            for (((pv, &gv), mv), vv) in pd.iter_mut().zip(g.data()).zip(md.iter_mut()).zip(vd) {
                *mv = beta1 * *mv + (1.0 - beta1) * gv;
                *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut params = vec![Tensor::vector(vec![0.5, -0.25])];
        let grads = vec![Tensor::zeros(vec![2])];
        let mut state = AdamState::new(&params, AdamParams::standard());
        state.step(&mut params, &grads).unwrap();
        assert_eq!(params[0].data(), &[0.5, -0.25]);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // Closed form: m_hat = g, v_hat = g^2, so the first update is
        // lr * g / (|g| + eps) which is lr * sign(g) up to O(eps).
        let mut params = vec![Tensor::vector(vec![1.0])];
        let grads = vec![Tensor::vector(vec![0.1])];
        let mut state = AdamState::new(&params, AdamParams::standard());
        state.step(&mut params, &grads).unwrap();
        let delta = 1.0 - params[0].data()[0];
        assert!((delta - 1e-4).abs() < 1e-9, "delta {delta}");
    }

    #[test]
    fn second_identical_gradient_moves_by_learning_rate() {
        // With constant gradients the bias-corrected ratio stays 1.
        let mut params = vec![Tensor::vector(vec![0.0])];
        let grads = vec![Tensor::vector(vec![0.3])];
        let mut state = AdamState::new(&params, AdamParams::standard());
        state.step(&mut params, &grads).unwrap();
        let p1 = params[0].data()[0];
        state.step(&mut params, &grads).unwrap();
        let step2 = p1 - params[0].data()[0];
        assert!((step2 - 1e-4).abs() < 1e-7, "step2 {step2}");
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut params = vec![Tensor::vector(vec![0.0])];
        let grads = vec![Tensor::vector(vec![f64::NAN])];
        let mut state = AdamState::new(&params, AdamParams::standard());
        let err = state.step(&mut params, &grads).unwrap_err();
        assert!(matches!(err, Error::Aborted { .. }));
    }
}
