//! Conditional noise predictor and its training loss.

use serde::{Deserialize, Serialize};

use super::embedding::time_embed;
use super::encoding::EncodedState;
use super::schedule::{forward_diffuse, NoiseSchedule};
use crate::error::{Error, Result};
use crate::nn::{Activation, ForwardCache, Mlp, NetSpec, ParamSet, Parameterized, Tensor};
use crate::rng::{self, Rng};
use rand::Rng as _;

/// Widths of the three sub-networks and the body's input slots:
/// `[x_t | state features | time features]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenoiserLayout {
    /// Width of the diffused vector (horizon x action dim).
    pub plan_dim: usize,
    /// Width of the encoded state.
    pub state_dim: usize,
    pub state_features: usize,
    /// Width of the raw sinusoidal step embedding (even).
    pub time_raw: usize,
    pub time_features: usize,
    pub hidden: usize,
    /// Hidden layers in the body; layers after the first are residual.
    pub hidden_layers: usize,
}

impl DenoiserLayout {
    pub fn body_input(&self) -> usize {
        self.plan_dim + self.state_features + self.time_features
    }

    fn specs(&self) -> Result<[NetSpec; 3]> {
        if self.time_raw == 0 || self.time_raw % 2 != 0 {
            return Err(Error::config("time_embed_width", "must be a positive even number"));
        }
        if self.hidden_layers == 0 {
            return Err(Error::config("denoiser_layers", "need at least one hidden layer"));
        }
        let state = NetSpec::mlp(
            vec![self.state_dim, self.state_features, self.state_features],
            Activation::Swish,
            Activation::Swish,
        )?;
        let time =
            NetSpec::mlp(vec![self.time_raw, self.time_features, self.time_features], Activation::Swish, Activation::Swish)?;
        let mut widths = vec![self.body_input()];
        widths.extend(std::iter::repeat(self.hidden).take(self.hidden_layers));
        widths.push(self.plan_dim);
        let body = NetSpec::residual_mlp(widths, Activation::Swish, Activation::Identity)?;
        Ok([state, time, body])
    }
}

/// The noise predictor: state encoder, step-embedding projection and a
/// residual body over the concatenated conditioning.
#[derive(Clone, Debug)]
pub struct Denoiser {
    layout: DenoiserLayout,
    state_net: Mlp,
    time_net: Mlp,
    body: Mlp,
}

/// Per-call conditioning computed once and reused across reverse steps.
#[derive(Clone, Debug)]
pub struct StateContext {
    features: Vec<f64>,
}

pub struct DenoiserCache {
    state: ForwardCache,
    time: ForwardCache,
    body: ForwardCache,
}

impl Denoiser {
    pub fn new(layout: DenoiserLayout, seed: u64) -> Result<Self> {
        let [s, t, b] = layout.specs()?;
        Ok(Denoiser {
            state_net: Mlp::new(s, rng::mix(seed, 1)),
            time_net: Mlp::new(t, rng::mix(seed, 2)),
            body: Mlp::new(b, rng::mix(seed, 3)),
            layout,
        })
    }

    /// Rebuilds from parameter sets in `[state, time, body]` order.
    pub fn from_params(layout: DenoiserLayout, sets: Vec<ParamSet>) -> Result<Self> {
        let [s, t, b] = layout.specs()?;
        let [ps, pt, pb]: [ParamSet; 3] =
            sets.try_into().map_err(|v: Vec<ParamSet>| Error::shape("denoiser parameter sets", 3, v.len()))?;
        Ok(Denoiser {
            state_net: Mlp::from_params(s, ps)?,
            time_net: Mlp::from_params(t, pt)?,
            body: Mlp::from_params(b, pb)?,
            layout,
        })
    }

    pub fn layout(&self) -> &DenoiserLayout {
        &self.layout
    }

    pub fn plan_dim(&self) -> usize {
        self.layout.plan_dim
    }

    pub fn context(&self, s: &EncodedState) -> Result<StateContext> {
        let f = self.state_net.forward(&Tensor::row(s.0.clone()))?;
        Ok(StateContext { features: f.into_values() })
    }

    fn time_features(&self, t: usize) -> Result<Vec<f64>> {
        let raw = time_embed(t, self.layout.time_raw)?;
        Ok(self.time_net.forward(&Tensor::row(raw))?.into_values())
    }

    /// Noise prediction for each row of `x_t` under one shared state and step.
    pub fn predict_batch(&self, ctx: &StateContext, x_t: &Tensor, t: usize) -> Result<Tensor> {
        if x_t.cols() != self.layout.plan_dim {
            return Err(Error::shape("denoiser sample", self.layout.plan_dim, x_t.cols()));
        }
        let tf = self.time_features(t)?;
        let rows = x_t.rows();
        let mut input = Vec::with_capacity(rows * self.layout.body_input());
        for r in 0..rows {
            input.extend_from_slice(x_t.row_slice(r));
            input.extend_from_slice(&ctx.features);
            input.extend_from_slice(&tf);
        }
        self.body.forward(&Tensor::new(vec![rows, self.layout.body_input()], input)?)
    }

    /// Single-sample prediction `eps_theta(x_t, s, t)`.
    pub fn predict(&self, x_t: &[f64], s: &EncodedState, t: usize) -> Result<Vec<f64>> {
        if s.width() != self.layout.state_dim {
            return Err(Error::shape("denoiser state", self.layout.state_dim, s.width()));
        }
        let ctx = self.context(s)?;
        Ok(self.predict_batch(&ctx, &Tensor::row(x_t.to_vec()), t)?.into_values())
    }

    /// Batched forward with per-row states and steps, keeping caches.
    pub fn forward_train(&self, x_t: &Tensor, states: &Tensor, steps: &[usize]) -> Result<(Tensor, DenoiserCache)> {
        let rows = x_t.rows();
        if x_t.cols() != self.layout.plan_dim {
            return Err(Error::shape("denoiser sample", self.layout.plan_dim, x_t.cols()));
        }
        if states.rows() != rows || steps.len() != rows {
            return Err(Error::shape("denoiser batch", rows, states.rows().min(steps.len())));
        }
        let (sf, state) = self.state_net.forward_cached(states)?;
        let mut raw = Vec::with_capacity(rows * self.layout.time_raw);
        for &t in steps {
            raw.extend(time_embed(t, self.layout.time_raw)?);
        }
        let (tf, time) = self.time_net.forward_cached(&Tensor::new(vec![rows, self.layout.time_raw], raw)?)?;
        let mut input = Vec::with_capacity(rows * self.layout.body_input());
        for r in 0..rows {
            input.extend_from_slice(x_t.row_slice(r));
            input.extend_from_slice(sf.row_slice(r));
            input.extend_from_slice(tf.row_slice(r));
        }
        let (out, body) = self.body.forward_cached(&Tensor::new(vec![rows, self.layout.body_input()], input)?)?;
        Ok((out, DenoiserCache { state, time, body }))
    }

    /// Gradients in `[state, time, body]` order.
    pub fn backward(&self, cache: &DenoiserCache, grad_out: &Tensor) -> Result<Vec<ParamSet>> {
        let (g_body, g_in) = self.body.backward(&cache.body, grad_out)?;
        let rows = g_in.rows();
        let (p, sfw, tfw) = (self.layout.plan_dim, self.layout.state_features, self.layout.time_features);
        let mut gs = Vec::with_capacity(rows * sfw);
        let mut gt = Vec::with_capacity(rows * tfw);
        for r in 0..rows {
            let row = g_in.row_slice(r);
            gs.extend_from_slice(&row[p..p + sfw]);
            gt.extend_from_slice(&row[p + sfw..]);
        }
        let (g_state, _) = self.state_net.backward(&cache.state, &Tensor::new(vec![rows, sfw], gs)?)?;
        let (g_time, _) = self.time_net.backward(&cache.time, &Tensor::new(vec![rows, tfw], gt)?)?;
        Ok(vec![g_state, g_time, g_body])
    }
}

impl Parameterized for Denoiser {
    fn param_sets(&self) -> Vec<&ParamSet> {
        vec![self.state_net.params(), self.time_net.params(), self.body.params()]
    }

    fn param_sets_mut(&mut self) -> Vec<&mut ParamSet> {
        vec![self.state_net.params_mut(), self.time_net.params_mut(), self.body.params_mut()]
    }
}

/// A diffusion training example: clean plan and its conditioning state.
#[derive(Clone, Debug)]
pub struct DiffusionSample {
    pub plan: Vec<f64>,
    pub state: EncodedState,
}

/// Noised batch drawn for one loss evaluation.
#[derive(Clone, Debug)]
pub struct NoisedBatch {
    pub x_t: Tensor,
    pub states: Tensor,
    pub steps: Vec<usize>,
    pub noise: Tensor,
}

/// Draws a uniform step and Gaussian noise per example.
pub fn noise_batch(batch: &[DiffusionSample], sched: &NoiseSchedule, rng: &mut Rng) -> Result<NoisedBatch> {
    let first = batch.first().ok_or_else(|| Error::usage("diffusion loss needs a non-empty batch"))?;
    let (p, sd) = (first.plan.len(), first.state.width());
    let mut xs = Vec::with_capacity(batch.len() * p);
    let mut ss = Vec::with_capacity(batch.len() * sd);
    let mut ns = Vec::with_capacity(batch.len() * p);
    let mut steps = Vec::with_capacity(batch.len());
    for ex in batch {
        if ex.plan.len() != p || ex.state.width() != sd {
            return Err(Error::shape("diffusion batch item", p + sd, ex.plan.len() + ex.state.width()));
        }
        let t = rng.gen_range(1..=sched.steps());
        let eps = rng::gaussian_vec(rng, p);
        xs.extend(forward_diffuse(&ex.plan, t, &eps, sched)?);
        ss.extend_from_slice(ex.state.as_slice());
        ns.extend(eps);
        steps.push(t);
    }
    let n = batch.len();
    Ok(NoisedBatch {
        x_t: Tensor::new(vec![n, p], xs)?,
        states: Tensor::new(vec![n, sd], ss)?,
        steps,
        noise: Tensor::new(vec![n, p], ns)?,
    })
}

/// Mean over the batch of `||eps - eps_theta(x_t, s, t)||^2`, with gradients.
pub fn loss_on(net: &Denoiser, nb: &NoisedBatch) -> Result<(f64, Vec<ParamSet>)> {
    let (pred, cache) = net.forward_train(&nb.x_t, &nb.states, &nb.steps)?;
    let n = nb.steps.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (y, e) in pred.values().iter().zip(nb.noise.values()) {
        let d = y - e;
        loss += d * d;
        grad.push(2.0 * d / n);
    }
    let grads = net.backward(&cache, &Tensor::new(pred.shape().to_vec(), grad)?)?;
    Ok((loss / n, grads))
}

/// Simplified (uniformly weighted) denoising objective.
pub fn diffusion_loss(
    net: &Denoiser,
    batch: &[DiffusionSample],
    sched: &NoiseSchedule,
    rng: &mut Rng,
) -> Result<(f64, Vec<ParamSet>)> {
    let nb = noise_batch(batch, sched, rng)?;
    loss_on(net, &nb)
}
