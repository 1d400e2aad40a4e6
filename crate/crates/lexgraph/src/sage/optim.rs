//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use super::model::SageModel;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..AdamConfig::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates, one buffer per parameter tensor in
/// declared order.
#[derive(Clone, Debug)]
pub struct AdamState {
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn for_model(model: &SageModel) -> Self {
        let sizes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
        AdamState {
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One optimizer step over every parameter's populated grad slot.
pub fn adam_step(model: &mut SageModel, state: &mut AdamState, config: &AdamConfig) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - config.beta1.powi(t);
    let bc2 = 1.0 - config.beta2.powi(t);

    for (idx, param) in model.params_mut().into_iter().enumerate() {
        let grad = param
            .grad()
            .expect("adam_step requires populated gradients")
            .to_vec();
        let m = &mut state.m[idx];
        let v = &mut state.v[idx];
        let values = param.values_mut();
        for k in 0..values.len() {
            let g = grad[k];
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            values[k] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
}
