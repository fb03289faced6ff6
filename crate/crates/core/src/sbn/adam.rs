use serde::{Deserialize, Serialize};

use crate::error::{ArmError, Result};

use super::Parameters;

/// Adam moment accumulators and hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Climb the objective instead of descending it.
    pub ascent: bool,
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(learning_rate: f64, ascent: bool) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            ascent,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }
}

/// One bias-corrected Adam update of `params` along `grads`.
pub fn adam_step<P: Parameters>(params: &mut P, grads: &P, state: &mut OptimizerState) -> Result<()> {
    let grads = grads.tensors();
    let mut params = params.tensors_mut();
    if params.len() != grads.len() || params.iter().zip(&grads).any(|(p, g)| p.len() != g.len()) {
        return Err(ArmError::Shape("parameters and gradients differ in shape".into()));
    }
    if state.first_moment.is_empty() {
        state.first_moment = grads.iter().map(|g| vec![0.0; g.len()]).collect();
        state.second_moment = state.first_moment.clone();
    }
    if state.first_moment.len() != grads.len() || state.first_moment.iter().zip(&grads).any(|(m, g)| m.len() != g.len())
    {
        return Err(ArmError::Shape("optimizer state does not match the parameters".into()));
    }

    state.step += 1;
    let step = i32::try_from(state.step).unwrap_or(i32::MAX);
    let bc1 = 1.0 - state.beta1.powi(step);
    let bc2 = 1.0 - state.beta2.powi(step);
    let sign = if state.ascent { 1.0 } else { -1.0 };
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.epsilon, state.learning_rate);

    for (((p, g), m), v) in params
        .iter_mut()
        .zip(&grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] += sign * lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
