//! The behavior policy of a run: diffusion candidates ranked by the twin
//! critics, or the TD3 actor with exploration noise for the baseline.

use rand::Rng as _;

use super::config::{RunConfig, Variant};
use crate::diffusion::{
    diffusion_loss, encoded_width, sample_candidates, Denoiser, DenoiserLayout, DiffusionSample, EncodedState,
    NoiseSchedule, ReverseChain,
};
use crate::env::ACTION_DIM;
use crate::error::{Error, Result};
use crate::nn::{ModelOptimizer, Parameterized};
use crate::rl::{critic_q, select_action, Batch, ReplayBuffer, Td3, Transition};
use crate::rng::{self, Rng};

/// How a decision is made.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Buffer warmup before learning starts.
    Warmup,
    /// Learning-phase behavior, with exploration where the variant has it.
    Explore,
    /// Frozen evaluation.
    Greedy,
}

/// One decision and the scores behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub action: Vec<f64>,
    pub plan: Vec<f64>,
    pub index: usize,
    pub q_values: Vec<f64>,
}

/// Losses of one learning step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepLosses {
    pub diffusion: Option<f64>,
    pub critic1: f64,
    pub critic2: f64,
    pub actor: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Agent {
    pub variant: Variant,
    pub denoiser: Denoiser,
    pub schedule: NoiseSchedule,
    pub chain: ReverseChain,
    pub learner: Td3,
    pub obs_dim: usize,
    pub history: usize,
    pub horizon: usize,
    pub candidates: usize,
    explore_noise: f64,
    freeze_diffusion: bool,
    diffusion_opt: ModelOptimizer,
}

pub fn denoiser_layout(cfg: &RunConfig, obs_dim: usize) -> DenoiserLayout {
    let d = &cfg.diffusion;
    DenoiserLayout {
        plan_dim: d.horizon * ACTION_DIM,
        state_dim: encoded_width(obs_dim, ACTION_DIM, d.history),
        state_features: d.state_features,
        time_raw: d.time_embed_width,
        time_features: d.time_features,
        hidden: d.hidden,
        hidden_layers: d.layers,
    }
}

impl Agent {
    pub fn new(cfg: &RunConfig, obs_dim: usize) -> Result<Self> {
        let layout = denoiser_layout(cfg, obs_dim);
        let denoiser = Denoiser::new(layout.clone(), rng::mix(cfg.seed, 101))?;
        let learner = Td3::new(layout.state_dim, ACTION_DIM, &cfg.learner.hidden(), cfg.learner.td3.clone(), rng::mix(cfg.seed, 202))?;
        Self::assemble(cfg, obs_dim, denoiser, learner)
    }

    /// Builds an agent around existing networks (fresh optimizer state).
    pub fn assemble(cfg: &RunConfig, obs_dim: usize, denoiser: Denoiser, learner: Td3) -> Result<Self> {
        let d = &cfg.diffusion;
        let schedule = NoiseSchedule::linear(d.steps, d.beta_start, d.beta_end)?;
        let chain = schedule.strided(d.sample_steps)?.with_clip(d.clip_x0);
        let diffusion_opt = ModelOptimizer::new(&denoiser, d.lr)?;
        Ok(Agent {
            variant: cfg.variant,
            denoiser,
            schedule,
            chain,
            learner,
            obs_dim,
            history: d.history,
            horizon: d.horizon,
            candidates: d.candidates,
            explore_noise: cfg.learner.explore_noise,
            freeze_diffusion: d.freeze_after_warmup,
            diffusion_opt,
        })
    }

    pub fn state_dim(&self) -> usize {
        encoded_width(self.obs_dim, ACTION_DIM, self.history)
    }

    /// Chooses an action. `seed` drives the candidate chains; `rng` the
    /// baseline's exploration.
    pub fn decide(&self, s: &EncodedState, mode: Mode, seed: u64, rng: &mut Rng) -> Result<Decision> {
        match self.variant {
            Variant::Diffusion => {
                let cands = sample_candidates(&self.denoiser, s, self.candidates, &self.chain, seed)?;
                let sel = select_action(&self.learner.critics, s, &cands)?;
                let plan = cands.plans[sel.index].clone();
                Ok(Decision { action: sel.action, plan, index: sel.index, q_values: sel.q_values })
            }
            Variant::Vanilla => {
                let action: Vec<f64> = match mode {
                    Mode::Warmup => (0..ACTION_DIM).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
                    Mode::Explore => self
                        .learner
                        .actor
                        .act(s)?
                        .into_iter()
                        .map(|a| (a + self.explore_noise * rng::gaussian(rng)).clamp(-1.0, 1.0))
                        .collect(),
                    Mode::Greedy => self.learner.actor.act(s)?,
                };
                let q = critic_q(&self.learner.critics, 1, s, &action)?.min(critic_q(&self.learner.critics, 2, s, &action)?);
                let plan = action.iter().cycle().take(self.horizon * ACTION_DIM).copied().collect();
                Ok(Decision { action, plan, index: 0, q_values: vec![q] })
            }
        }
    }

    /// One learner step on a batch drawn from `buffer`.
    pub fn learn(&mut self, buffer: &ReplayBuffer, batch: usize, rng: &mut Rng) -> Result<StepLosses> {
        let items: Vec<&Transition> = buffer.sample(batch, rng)?;
        let b = Batch::from_transitions(&items)?;
        let stats = self.learner.update(&b, rng)?;
        let mut diffusion = None;
        if self.variant == Variant::Diffusion && !self.freeze_diffusion {
            let samples: Vec<DiffusionSample> =
                items.iter().map(|t| DiffusionSample { plan: t.plan.clone(), state: t.state.clone() }).collect();
            let (loss, grads) = diffusion_loss(&self.denoiser, &samples, &self.schedule, rng)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!("non-finite diffusion loss {loss}")));
            }
            self.diffusion_opt.step(&mut self.denoiser, &grads)?;
            diffusion = Some(loss);
        }
        Ok(StepLosses { diffusion, critic1: stats.critic1, critic2: stats.critic2, actor: stats.actor })
    }

    /// All parameter sets in checkpoint order.
    pub fn param_sets(&self) -> Vec<(&'static str, &crate::nn::ParamSet)> {
        let d = self.denoiser.param_sets();
        vec![
            ("denoiser_state", d[0]),
            ("denoiser_time", d[1]),
            ("denoiser_body", d[2]),
            ("critic1", self.learner.critics.q1.params()),
            ("critic2", self.learner.critics.q2.params()),
            ("actor", self.learner.actor.net.params()),
            ("target_critic1", self.learner.target_critics.q1.params()),
            ("target_critic2", self.learner.target_critics.q2.params()),
            ("target_actor", self.learner.target_actor.net.params()),
        ]
    }
}
