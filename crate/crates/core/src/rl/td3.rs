//! Clipped double-Q learning, delayed actor updates and value-guided
//! candidate selection.

use serde::{Deserialize, Serialize};

use super::nets::{concat_rows, ActionValue, Actor, CriticPair};
use super::replay::Batch;
use crate::diffusion::{CandidateSet, EncodedState};
use crate::error::{Error, Result};
use crate::nn::{ModelOptimizer, ParamSet, Tensor};
use crate::rng::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Td3Config {
    pub gamma: f64,
    pub tau: f64,
    /// Target-policy smoothing noise.
    pub policy_noise: f64,
    /// Clip on the smoothing noise.
    pub noise_clip: f64,
    pub policy_delay: u64,
    pub critic_lr: f64,
    pub actor_lr: f64,
}

impl Default for Td3Config {
    fn default() -> Self {
        Td3Config { gamma: 0.99, tau: 0.005, policy_noise: 0.2, noise_clip: 0.5, policy_delay: 2, critic_lr: 3e-4, actor_lr: 3e-4 }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", format!("must lie in [0, 1], got {}", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config("tau", format!("must lie in (0, 1], got {}", self.tau)));
        }
        if !(self.policy_noise >= 0.0 && self.policy_noise.is_finite()) {
            return Err(Error::config("policy_noise", "must be non-negative"));
        }
        if !(self.noise_clip > 0.0 && self.noise_clip.is_finite()) {
            return Err(Error::config("noise_clip", "must be positive"));
        }
        if self.policy_delay == 0 {
            return Err(Error::config("policy_delay", "must be at least 1"));
        }
        for (k, v) in [("critic_lr", self.critic_lr), ("actor_lr", self.actor_lr)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Result of scoring a candidate set.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// First action of the chosen plan.
    pub action: Vec<f64>,
    pub index: usize,
    /// Score per candidate: `min(Q1, Q2)` of its first action.
    pub q_values: Vec<f64>,
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &q) in scores.iter().enumerate() {
        if best.map_or(true, |b| q > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Picks the plan whose first action scores highest under `min(Q1, Q2)`.
pub fn select_action(critics: &CriticPair, s: &EncodedState, candidates: &CandidateSet) -> Result<Selection> {
    select_plan(critics, s, &candidates.plans)
}

pub fn select_plan(critics: &CriticPair, s: &EncodedState, plans: &[Vec<f64>]) -> Result<Selection> {
    if plans.is_empty() {
        return Err(Error::usage("candidate set is empty"));
    }
    let ad = critics.action_dim();
    let mut acts = Vec::with_capacity(plans.len() * ad);
    for p in plans {
        if p.len() < ad || p.len() % ad != 0 {
            return Err(Error::shape("candidate plan", ad, p.len()));
        }
        acts.extend_from_slice(&p[..ad]);
    }
    let k = plans.len();
    let mut states = Vec::with_capacity(k * s.width());
    (0..k).for_each(|_| states.extend_from_slice(s.as_slice()));
    let q_values = critics.q_min(&Tensor::new(vec![k, s.width()], states)?, &Tensor::new(vec![k, ad], acts)?)?;
    if q_values.iter().any(|q| !q.is_finite()) {
        return Err(Error::Training("critic produced a non-finite score".into()));
    }
    let index = argmax(&q_values).unwrap();
    Ok(Selection { action: plans[index][..ad].to_vec(), index, q_values })
}

/// `clip(N(0, sigma^2), -c, c)` per dimension.
pub fn smoothing_noise(rng: &mut Rng, sigma: f64, clip: f64, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| (sigma * rng::gaussian(rng)).clamp(-clip, clip)).collect()
}

/// Target value with its parts.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetValue {
    pub y: f64,
    pub q1: f64,
    pub q2: f64,
    pub noise: Vec<f64>,
}

/// Bellman target for one transition.
#[allow(clippy::too_many_arguments)]
pub fn td3_target(
    r: f64,
    s_next: &EncodedState,
    done: bool,
    targets: &CriticPair,
    target_actor: &Actor,
    gamma: f64,
    sigma: f64,
    c: f64,
    rng: &mut Rng,
) -> Result<TargetValue> {
    let states = Tensor::row(s_next.0.clone());
    let mut out = td3_targets(&[r], &states, &[done], targets, target_actor, gamma, sigma, c, rng)?;
    Ok(out.pop().unwrap())
}

#[allow(clippy::too_many_arguments)]
pub fn td3_targets(
    rewards: &[f64],
    next_states: &Tensor,
    dones: &[bool],
    targets: &CriticPair,
    target_actor: &Actor,
    gamma: f64,
    sigma: f64,
    c: f64,
    rng: &mut Rng,
) -> Result<Vec<TargetValue>> {
    if !(0.0..=1.0).contains(&gamma) || !(c > 0.0) {
        return Err(Error::usage(format!("invalid target parameters gamma={gamma}, c={c}")));
    }
    let n = rewards.len();
    if next_states.rows() != n || dones.len() != n {
        return Err(Error::shape("target batch", n, next_states.rows()));
    }
    let mut a = target_actor.act_batch(next_states)?;
    let ad = a.cols();
    let mut noises = Vec::with_capacity(n);
    for r in 0..n {
        let z = smoothing_noise(rng, sigma, c, ad);
        for (v, e) in a.row_slice_mut(r).iter_mut().zip(&z) {
            *v = (*v + e).clamp(-1.0, 1.0);
        }
        noises.push(z);
    }
    let (q1, q2) = targets.q_both(next_states, &a)?;
    Ok((0..n)
        .zip(noises)
        .map(|(i, noise)| {
            let bootstrap = if dones[i] { 0.0 } else { gamma * q1[i].min(q2[i]) };
            TargetValue { y: rewards[i] + bootstrap, q1: q1[i], q2: q2[i], noise }
        })
        .collect())
}

/// Mean-squared Bellman errors of both critics against shared targets,
/// with gradients `[grad q1, grad q2]`.
pub fn critic_losses(critics: &CriticPair, batch: &Batch, y: &[f64]) -> Result<(f64, f64, Vec<ParamSet>)> {
    if batch.is_empty() {
        return Err(Error::usage("critic update needs a non-empty batch"));
    }
    let input = concat_rows(&batch.states, &batch.actions)?;
    let n = batch.len() as f64;
    let mut losses = [0.0; 2];
    let mut grads = Vec::with_capacity(2);
    for (k, net) in [&critics.q1, &critics.q2].into_iter().enumerate() {
        let (q, cache) = net.forward_cached(&input)?;
        let mut g = Vec::with_capacity(q.len());
        for (qi, yi) in q.values().iter().zip(y) {
            let d = qi - yi;
            losses[k] += d * d / n;
            g.push(2.0 * d / n);
        }
        grads.push(net.backward(&cache, &Tensor::new(q.shape().to_vec(), g)?)?.0);
    }
    Ok((losses[0], losses[1], grads))
}

/// `-mean Q(s, pi(s))` and the actor gradient.
pub fn actor_loss<Q: ActionValue>(actor: &Actor, q: &Q, states: &Tensor) -> Result<(f64, ParamSet)> {
    let n = states.rows();
    let (a, cache) = actor.net.forward_cached(states)?;
    let (values, ga) = q.value_and_action_grad(states, &a)?;
    let loss = -values.iter().sum::<f64>() / n as f64;
    let g: Vec<f64> = ga.values().iter().map(|v| -v / n as f64).collect();
    let (grads, _) = actor.net.backward(&cache, &Tensor::new(ga.shape().to_vec(), g)?)?;
    Ok((loss, grads))
}

/// `target <- tau * live + (1 - tau) * target`, elementwise.
pub fn soft_update(target: &mut ParamSet, live: &ParamSet, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::usage(format!("tau must lie in (0, 1], got {tau}")));
    }
    if !target.same_layout(live) {
        return Err(Error::shape("soft update layout", live.scalar_count(), target.scalar_count()));
    }
    for (t, l) in target.entries.iter_mut().zip(&live.entries) {
        for (tv, lv) in t.tensor.values_mut().iter_mut().zip(l.tensor.values()) {
            *tv = tau * lv + (1.0 - tau) * *tv;
        }
    }
    Ok(())
}

/// Losses reported by one learner update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub critic1: f64,
    pub critic2: f64,
    pub actor: Option<f64>,
}

/// Live and target networks with their optimizers.
#[derive(Clone, Debug)]
pub struct Td3 {
    pub cfg: Td3Config,
    pub critics: CriticPair,
    pub target_critics: CriticPair,
    pub actor: Actor,
    pub target_actor: Actor,
    critic_opt: ModelOptimizer,
    actor_opt: ModelOptimizer,
    actor_calls: u64,
}

impl Td3 {
    pub fn new(state_dim: usize, act_dim: usize, hidden: &[usize], cfg: Td3Config, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let critics = CriticPair::new(state_dim, act_dim, hidden, seed)?;
        let actor = Actor::new(state_dim, act_dim, hidden, seed)?;
        Self::from_parts(cfg, critics, actor)
    }

    /// Targets start as copies of the live networks.
    pub fn from_parts(cfg: Td3Config, critics: CriticPair, actor: Actor) -> Result<Self> {
        if actor.net.input_width() != critics.state_dim() || actor.net.output_width() != critics.action_dim() {
            return Err(Error::shape("actor/critic widths", critics.state_dim(), actor.net.input_width()));
        }
        let critic_opt = ModelOptimizer::new(&critics, cfg.critic_lr)?;
        let actor_opt = ModelOptimizer::new(&actor, cfg.actor_lr)?;
        Ok(Td3 {
            target_critics: critics.clone(),
            target_actor: actor.clone(),
            critics,
            actor,
            critic_opt,
            actor_opt,
            actor_calls: 0,
            cfg,
        })
    }

    pub fn actor_calls(&self) -> u64 {
        self.actor_calls
    }

    /// One Adam step on both critics. Returns the pre-step losses.
    pub fn critic_update(&mut self, batch: &Batch, rng: &mut Rng) -> Result<(f64, f64)> {
        if batch.is_empty() {
            return Err(Error::usage("critic update needs a non-empty batch"));
        }
        let c = &self.cfg;
        let y: Vec<f64> = td3_targets(
            &batch.rewards,
            &batch.next_states,
            &batch.dones,
            &self.target_critics,
            &self.target_actor,
            c.gamma,
            c.policy_noise,
            c.noise_clip,
            rng,
        )?
        .into_iter()
        .map(|t| t.y)
        .collect();
        let (l1, l2, grads) = critic_losses(&self.critics, batch, &y)?;
        if !(l1.is_finite() && l2.is_finite()) {
            return Err(Error::Training(format!("non-finite critic loss ({l1}, {l2})")));
        }
        self.critic_opt.step(&mut self.critics, &grads)?;
        Ok((l1, l2))
    }

    /// Every `policy_delay`-th call ascends `mean Q1(s, pi(s))` and moves
    /// all targets; other calls leave every network untouched.
    pub fn actor_update(&mut self, batch: &Batch) -> Result<Option<f64>> {
        if batch.is_empty() {
            return Err(Error::usage("actor update needs a non-empty batch"));
        }
        self.actor_calls += 1;
        if self.actor_calls % self.cfg.policy_delay != 0 {
            return Ok(None);
        }
        let (loss, grads) = actor_loss(&self.actor, &self.critics.q1, &batch.states)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!("non-finite actor loss {loss}")));
        }
        self.actor_opt.step(&mut self.actor, &[grads])?;
        self.update_targets()?;
        Ok(Some(loss))
    }

    pub fn update_targets(&mut self) -> Result<()> {
        let tau = self.cfg.tau;
        soft_update(self.target_critics.q1.params_mut(), self.critics.q1.params(), tau)?;
        soft_update(self.target_critics.q2.params_mut(), self.critics.q2.params(), tau)?;
        soft_update(self.target_actor.net.params_mut(), self.actor.net.params(), tau)
    }

    pub fn update(&mut self, batch: &Batch, rng: &mut Rng) -> Result<UpdateStats> {
        let (critic1, critic2) = self.critic_update(batch, rng)?;
        let actor = self.actor_update(batch)?;
        Ok(UpdateStats { critic1, critic2, actor })
    }
}
