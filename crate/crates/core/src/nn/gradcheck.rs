//! Central finite-difference oracle for analytic gradients.

use super::net::{Mlp, NetSpec, ParamSet};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Anything holding one or more parameter sets.
pub trait Parameterized {
    fn param_sets(&self) -> Vec<&ParamSet>;
    fn param_sets_mut(&mut self) -> Vec<&mut ParamSet>;
}

impl Parameterized for Mlp {
    fn param_sets(&self) -> Vec<&ParamSet> {
        vec![self.params()]
    }

    fn param_sets_mut(&mut self) -> Vec<&mut ParamSet> {
        vec![self.params_mut()]
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(Error::usage(format!("finite-difference step must lie in (0, 1e-2], got {eps}")));
    }
    Ok(())
}

/// Relative error `|analytic - numeric| / max(1, |numeric|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(1.0)
}

/// Max relative error between `analytic` (one gradient set per parameter
/// set of `model`) and central differences of `loss`.
pub fn finite_difference_error<M, F>(model: &M, analytic: &[ParamSet], loss: F, eps: f64) -> Result<f64>
where
    M: Parameterized + Clone,
    F: Fn(&M) -> f64,
{
    check_eps(eps)?;
    let sets = model.param_sets().len();
    if sets != analytic.len() {
        return Err(Error::shape("gradient sets", sets, analytic.len()));
    }
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for s in 0..sets {
        for e in 0..analytic[s].entries.len() {
            for k in 0..analytic[s].entries[e].tensor.len() {
                let orig = probe.param_sets()[s].entries[e].tensor.values()[k];
                probe.param_sets_mut()[s].entries[e].tensor.values_mut()[k] = orig + eps;
                let up = loss(&probe);
                probe.param_sets_mut()[s].entries[e].tensor.values_mut()[k] = orig - eps;
                let down = loss(&probe);
                probe.param_sets_mut()[s].entries[e].tensor.values_mut()[k] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let a = analytic[s].entries[e].tensor.values()[k];
                worst = worst.max(relative_error(a, numeric));
            }
        }
    }
    Ok(worst)
}

/// Fixed output weighting used to reduce a network output to a scalar.
fn probe_weights(n: usize) -> Vec<f64> {
    (0..n).map(|j| 1.0 - 0.37 * (j % 5) as f64 + 0.11 * j as f64).collect()
}

/// Gradient check of a single network under the scalar loss
/// `sum_j c_j * y_j` with fixed weights `c`. Covers both parameter and
/// input gradients.
pub fn grad_check(spec: &NetSpec, params: &ParamSet, input: &Tensor, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let net = Mlp::from_params(spec.clone(), params.clone())?;
    let batch = input.rows();
    let c = probe_weights(spec.output_width());
    let weighted = |y: &Tensor| -> f64 {
        (0..batch).map(|r| y.row_slice(r).iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()).sum()
    };
    let (_, cache) = net.forward_cached(input)?;
    let grad_out = Tensor::new(vec![batch, c.len()], c.iter().cycle().take(batch * c.len()).copied().collect())?;
    let (grads, grad_in) = net.backward(&cache, &grad_out)?;
    let mut worst = finite_difference_error(&net, &[grads], |m: &Mlp| weighted(&m.forward(input).unwrap()), eps)?;
    let mut x = input.clone();
    for k in 0..x.len() {
        let orig = x.values()[k];
        x.values_mut()[k] = orig + eps;
        let up = weighted(&net.forward(&x)?);
        x.values_mut()[k] = orig - eps;
        let down = weighted(&net.forward(&x)?);
        x.values_mut()[k] = orig;
        worst = worst.max(relative_error(grad_in.values()[k], (up - down) / (2.0 * eps)));
    }
    Ok(worst)
}
