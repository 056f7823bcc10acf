//! Adam optimizer with bias correction, operating in place on flat
//! parameter vectors.

use crate::error::{Error, Result};

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.learning_rate.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid_argument(format!(
                "optimizer hyperparameters out of range: {self:?}"
            )))
        }
    }
}

/// Per-parameter moment estimates. One state belongs to one parameter
/// vector; mixing dimensions is an error.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(dim: usize, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            step_count: 0,
            config,
        })
    }
}

/// One optimizer step: update moments, bias-correct, and move `params`
/// against the gradient. Fails if the result stops being finite.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grad: &[f64]) -> Result<()> {
    if params.len() != state.first_moment.len() || grad.len() != params.len() {
        return Err(Error::invalid_argument(format!(
            "dimension mismatch: {} params, {} grads, optimizer state for {}",
            params.len(),
            grad.len(),
            state.first_moment.len()
        )));
    }
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    state.step_count += 1;
    let t = state.step_count as i32;
    let bias1 = 1.0 - beta1.powi(t);
    let bias2 = 1.0 - beta2.powi(t);
    let mut finite = true;
    for i in 0..params.len() {
        let g = grad[i];
        let m = beta1 * state.first_moment[i] + (1.0 - beta1) * g;
        let v = beta2 * state.second_moment[i] + (1.0 - beta2) * g * g;
        state.first_moment[i] = m;
        state.second_moment[i] = v;
        let m_hat = m / bias1;
        let v_hat = v / bias2;
        params[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        finite &= params[i].is_finite();
    }
    if finite {
        Ok(())
    } else {
        Err(Error::NonFiniteWeights)
    }
}
