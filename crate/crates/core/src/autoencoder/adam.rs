use crate::error::{Error, Result};

use super::params::AeParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha.is_finite()
            && self.alpha > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon.is_finite()
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam hyperparameters {self:?}")))
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: AeParams,
    pub v: AeParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(like: &AeParams) -> Self {
        Self {
            m: AeParams::zeros(like.n_in(), like.n_hidden()),
            v: AeParams::zeros(like.n_in(), like.n_hidden()),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update, in place. Nothing is modified when the
/// gradient contains a non-finite entry.
pub fn adam_step(
    params: &mut AeParams,
    grads: &AeParams,
    state: &mut AdamState,
    hyper: &AdamConfig,
) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) || !params.same_shape(&state.v) {
        return Err(Error::Dimension("Adam operands differ in shape".into()));
    }
    if !grads.is_finite() {
        return Err(Error::Divergence("non-finite gradient".into()));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);
    let (b1, b2) = (hyper.beta1, hyper.beta2);
    params
        .iter_mut()
        .zip(grads.iter())
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
        .for_each(|((p, &g), (m, v))| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= hyper.alpha * m_hat / (v_hat.sqrt() + hyper.epsilon);
        });
    Ok(())
}
