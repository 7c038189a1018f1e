use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{Model, Params};
use crate::tensor::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Params<T>,
    pub v: Params<T>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(model: &Model<T>) -> Self {
        AdamState {
            m: Params::zeros(model.arch()),
            v: Params::zeros(model.arch()),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step<T: Real>(model: &mut Model<T>, state: &mut AdamState<T>, grads: &Params<T>, cfg: &AdamConfig) -> Result<()> {
    let shapes_match = |p: &Params<T>| {
        p.tensors.len() == grads.tensors.len() && p.tensors.iter().zip(&grads.tensors).all(|(a, b)| a.shape() == b.shape())
    };
    if !shapes_match(model.params()) || !shapes_match(&state.m) || !shapes_match(&state.v) {
        return Err(invalid("gradient or optimiser state shapes do not match the model"));
    }
    if cfg.lr.is_nan() || cfg.lr <= 0.0 {
        return Err(invalid(format!("learning rate must be positive, got {}", cfg.lr)));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let c1 = T::of(1.0 - cfg.beta1.powi(t));
    let c2 = T::of(1.0 - cfg.beta2.powi(t));
    let (lr, eps) = (T::of(cfg.lr), T::of(cfg.eps));
    let params = model.params_mut();
    for (((p, g), m), v) in params
        .tensors
        .iter_mut()
        .zip(&grads.tensors)
        .zip(state.m.tensors.iter_mut())
        .zip(state.v.tensors.iter_mut())
    {
        for (((pv, &gv), mv), vv) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut().iter_mut())
            .zip(v.data_mut().iter_mut())
        {
            *mv = b1 * *mv + (T::one() - b1) * gv;
            *vv = b2 * *vv + (T::one() - b2) * gv * gv;
            let mhat = *mv / c1;
            let vhat = *vv / c2;
            *pv = *pv - lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}
