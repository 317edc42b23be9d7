//! Adam with bias correction.

use super::fit::TrainConfig;
use crate::error::{Error, Result};

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        AdamState { m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }
}

/// One Adam update in place. Rejects non-finite gradients.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::invalid("adam: parameter/gradient/state length mismatch"));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::Divergence {
            msg: "non-finite gradient".into(),
            step: state.t as usize,
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let b1 = cfg.beta1;
    let b2 = cfg.beta2;
    let corr1 = 1.0 - b1.powi(t);
    let corr2 = 1.0 - b2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let mhat = state.m[i] / corr1;
        let vhat = state.v[i] / corr2;
        params[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.epsilon);
    }
    Ok(())
}
