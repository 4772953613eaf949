//! Reverse-process candidate generation.

use super::denoiser::{Denoiser, StateContext};
use super::encoding::EncodedState;
use super::schedule::ReverseChain;
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::rng;

/// Anything that predicts the noise in a batch of samples at one step.
pub trait NoisePredictor {
    type Context;
    fn plan_dim(&self) -> usize;
    fn prepare(&self, s: &EncodedState) -> Result<Self::Context>;
    fn predict(&self, ctx: &Self::Context, x_t: &Tensor, t: usize) -> Result<Tensor>;
}

impl NoisePredictor for Denoiser {
    type Context = StateContext;

    fn plan_dim(&self) -> usize {
        Denoiser::plan_dim(self)
    }

    fn prepare(&self, s: &EncodedState) -> Result<StateContext> {
        if s.width() != self.layout().state_dim {
            return Err(Error::shape("denoiser state", self.layout().state_dim, s.width()));
        }
        self.context(s)
    }

    fn predict(&self, ctx: &StateContext, x_t: &Tensor, t: usize) -> Result<Tensor> {
        self.predict_batch(ctx, x_t, t)
    }
}

/// Predicts zero noise everywhere.
#[derive(Clone, Copy, Debug)]
pub struct ZeroPredictor(pub usize);

impl NoisePredictor for ZeroPredictor {
    type Context = ();

    fn plan_dim(&self) -> usize {
        self.0
    }

    fn prepare(&self, _: &EncodedState) -> Result<()> {
        Ok(())
    }

    fn predict(&self, _: &(), x_t: &Tensor, _: usize) -> Result<Tensor> {
        Ok(x_t.zeros_like())
    }
}

/// K clamped plans plus the noise scales used on the way.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub plans: Vec<Vec<f64>>,
    /// `sigmas[j]` is the noise scale of the j-th reverse step taken.
    pub sigmas: Vec<f64>,
    pub seed: u64,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }
}

/// Runs `count` independent reverse chains and returns the raw (unclamped)
/// samples after each of the requested numbers of reverse steps.
///
/// Chain `k` draws from its own stream derived from `(seed, k)`.
pub fn reverse_snapshots<P: NoisePredictor>(
    net: &P,
    s: &EncodedState,
    count: usize,
    chain: &ReverseChain,
    seed: u64,
    stages: &[usize],
) -> Result<Vec<Vec<Vec<f64>>>> {
    if count == 0 {
        return Err(Error::usage("candidate count must be at least 1"));
    }
    if let Some(&bad) = stages.iter().find(|&&st| st == 0 || st > chain.len()) {
        return Err(Error::usage(format!("denoising stage {bad} outside 1..={}", chain.len())));
    }
    let dim = net.plan_dim();
    let ctx = net.prepare(s)?;
    let mut streams: Vec<rng::Rng> = (0..count).map(|k| rng::seeded(rng::mix(seed, k as u64), rng::stream::POLICY)).collect();
    let mut x = Vec::with_capacity(count * dim);
    for r in streams.iter_mut() {
        x.extend(rng::gaussian_vec(r, dim));
    }
    let mut x = Tensor::new(vec![count, dim], x)?;
    let mut snaps = vec![Vec::new(); stages.len()];
    for (taken, i) in (0..chain.len()).rev().enumerate() {
        let t = chain.timesteps[i];
        let mut eps = net.predict(&ctx, &x, t)?;
        if chain.clip_x0 {
            let (ra, rb) = (chain.alpha_bars[i].sqrt(), (1.0 - chain.alpha_bars[i]).sqrt());
            for (e, &xv) in eps.values_mut().iter_mut().zip(x.values()) {
                let x0 = ((xv - rb * *e) / ra).clamp(-1.0, 1.0);
                *e = (xv - ra * x0) / rb;
            }
        }
        let coef = chain.betas[i] / (1.0 - chain.alpha_bars[i]).sqrt();
        let scale = 1.0 / chain.alphas[i].sqrt();
        let sigma = chain.sigma(i);
        for (k, stream) in streams.iter_mut().enumerate() {
            let row = x.row_slice_mut(k);
            let e = eps.row_slice(k);
            for j in 0..dim {
                row[j] = (row[j] - coef * e[j]) * scale;
            }
            if sigma > 0.0 {
                for v in row.iter_mut() {
                    *v += sigma * rng::gaussian(stream);
                }
            }
        }
        let done = taken + 1;
        for (slot, _) in stages.iter().enumerate().filter(|(_, &st)| st == done) {
            snaps[slot] = (0..count).map(|k| x.row_slice(k).to_vec()).collect();
        }
    }
    Ok(snaps)
}

pub fn clamp_unit(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0));
}

/// K candidate plans from complete reverse chains, clamped to `[-1, 1]`.
pub fn sample_candidates<P: NoisePredictor>(
    net: &P,
    s: &EncodedState,
    count: usize,
    chain: &ReverseChain,
    seed: u64,
) -> Result<CandidateSet> {
    let mut snaps = reverse_snapshots(net, s, count, chain, seed, &[chain.len()])?;
    let mut plans = snaps.pop().unwrap();
    plans.iter_mut().for_each(|p| clamp_unit(p));
    let sigmas = (0..chain.len()).rev().map(|i| chain.sigma(i)).collect();
    Ok(CandidateSet { plans, sigmas, seed })
}
