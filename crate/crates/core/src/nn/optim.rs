//! Adaptive-moment (Adam) parameter updates.

use super::gradcheck::Parameterized;
use super::net::ParamSet;
use crate::error::{Error, Result};

/// Moment accumulators for one [`ParamSet`].
#[derive(Clone, Debug)]
pub struct OptimState {
    pub m: ParamSet,
    pub v: ParamSet,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimState {
    pub fn new(params: &ParamSet, lr: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::config("lr", format!("learning rate must be positive, got {lr}")));
        }
        Ok(OptimState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        })
    }
}

/// One bias-corrected Adam step. Non-finite gradients are refused before
/// anything is modified.
pub fn opt_step(params: &mut ParamSet, grads: &ParamSet, state: &mut OptimState) -> Result<()> {
    if !params.same_layout(grads) || !params.same_layout(&state.m) {
        return Err(Error::shape("optimizer step", params.scalar_count(), grads.scalar_count()));
    }
    if !grads.is_finite() {
        return Err(Error::Training("non-finite gradient; optimizer step refused".into()));
    }
    state.step += 1;
    let t = state.step as f64;
    let c1 = 1.0 - state.beta1.powf(t);
    let c2 = 1.0 - state.beta2.powf(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps);
    for (((p, g), m), v) in params
        .entries
        .iter_mut()
        .zip(&grads.entries)
        .zip(state.m.entries.iter_mut())
        .zip(state.v.entries.iter_mut())
    {
        let p = p.tensor.values_mut();
        let g = g.tensor.values();
        let m = m.tensor.values_mut();
        let v = v.tensor.values_mut();
        for k in 0..p.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            let mh = m[k] / c1;
            let vh = v[k] / c2;
            p[k] -= lr * mh / (vh.sqrt() + eps);
        }
    }
    Ok(())
}

/// One [`OptimState`] per parameter set of a model.
#[derive(Clone, Debug)]
pub struct ModelOptimizer {
    states: Vec<OptimState>,
}

impl ModelOptimizer {
    pub fn new<M: Parameterized>(model: &M, lr: f64) -> Result<Self> {
        let states = model.param_sets().into_iter().map(|p| OptimState::new(p, lr)).collect::<Result<_>>()?;
        Ok(ModelOptimizer { states })
    }

    pub fn steps(&self) -> u64 {
        self.states.first().map_or(0, |s| s.step)
    }

    /// Steps every parameter set, or none of them if any gradient is non-finite.
    pub fn step<M: Parameterized>(&mut self, model: &mut M, grads: &[ParamSet]) -> Result<()> {
        if grads.len() != self.states.len() {
            return Err(Error::shape("gradient sets", self.states.len(), grads.len()));
        }
        if !grads.iter().all(ParamSet::is_finite) {
            return Err(Error::Training("non-finite gradient; optimizer step refused".into()));
        }
        for ((p, g), st) in model.param_sets_mut().into_iter().zip(grads).zip(self.states.iter_mut()) {
            opt_step(p, g, st)?;
        }
        Ok(())
    }
}
