//! Checkpoint directories: `header.json` plus one binary parameter file per
//! network.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::agent::{denoiser_layout, Agent};
use super::config::{RunConfig, Variant};
use crate::diffusion::{encoded_width, Denoiser, DenoiserLayout};
use crate::env::ACTION_DIM;
use crate::error::{Error, Result};
use crate::nn::{io, Mlp};
use crate::rl::{Actor, CriticPair, Td3};

pub const FORMAT: &str = "auvdiff-checkpoint";
pub const VERSION: u32 = 1;

const FILES: [&str; 9] = [
    "denoiser_state",
    "denoiser_time",
    "denoiser_body",
    "critic1",
    "critic2",
    "actor",
    "target_critic1",
    "target_critic2",
    "target_actor",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub variant: Variant,
    pub seed: u64,
    pub episode: usize,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub history: usize,
    pub horizon: usize,
    pub candidates: usize,
    pub diffusion_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub sample_steps: usize,
    pub layout: DenoiserLayout,
    pub critic_hidden: Vec<usize>,
    pub files: Vec<String>,
}

impl CheckpointHeader {
    /// Parses and sanity-checks a header.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let h: CheckpointHeader = serde_json::from_slice(bytes).map_err(|e| Error::load(format!("checkpoint header: {e}")))?;
        h.check()?;
        Ok(h)
    }

    fn check(&self) -> Result<()> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::load(format!("unsupported checkpoint {} v{}", self.format, self.version)));
        }
        if self.act_dim != ACTION_DIM || self.obs_dim == 0 || self.horizon == 0 || self.candidates == 0 {
            return Err(Error::load("checkpoint dimensions are invalid"));
        }
        let state_dim = self
            .obs_dim
            .checked_mul(self.history.saturating_add(1))
            .and_then(|v| v.checked_add(self.act_dim.checked_mul(self.history)?))
            .ok_or_else(|| Error::load("checkpoint dimensions overflow"))?;
        if self.layout.state_dim != state_dim || Some(self.layout.plan_dim) != self.horizon.checked_mul(self.act_dim) {
            return Err(Error::load("checkpoint layout disagrees with its dimensions"));
        }
        if self.critic_hidden.is_empty() || self.critic_hidden.contains(&0) {
            return Err(Error::load("checkpoint critic widths are invalid"));
        }
        if !(self.beta_start > 0.0 && self.beta_start < self.beta_end && self.beta_end < 1.0) {
            return Err(Error::load("checkpoint schedule is invalid"));
        }
        if self.diffusion_steps < 2 || self.sample_steps == 0 || self.sample_steps > self.diffusion_steps {
            return Err(Error::load("checkpoint chain lengths are invalid"));
        }
        if self.files != FILES {
            return Err(Error::load("checkpoint file list is not the expected set"));
        }
        Ok(())
    }

    pub fn for_agent(agent: &Agent, cfg: &RunConfig, episode: usize) -> Self {
        CheckpointHeader {
            format: FORMAT.into(),
            version: VERSION,
            variant: agent.variant,
            seed: cfg.seed,
            episode,
            obs_dim: agent.obs_dim,
            act_dim: ACTION_DIM,
            history: agent.history,
            horizon: agent.horizon,
            candidates: agent.candidates,
            diffusion_steps: cfg.diffusion.steps,
            beta_start: cfg.diffusion.beta_start,
            beta_end: cfg.diffusion.beta_end,
            sample_steps: cfg.diffusion.sample_steps,
            layout: agent.denoiser.layout().clone(),
            critic_hidden: cfg.learner.hidden(),
            files: FILES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn save(dir: &Path, agent: &Agent, cfg: &RunConfig, episode: usize) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let header = CheckpointHeader::for_agent(agent, cfg, episode);
    let mut json = serde_json::to_string_pretty(&header).map_err(|e| Error::load(e.to_string()))?;
    json.push('\n');
    std::fs::write(dir.join("header.json"), json)?;
    for (name, params) in agent.param_sets() {
        io::save(params, &dir.join(format!("{name}.bin")))?;
    }
    Ok(())
}

/// Loads a checkpoint for use under `cfg`. The network dimensions must match
/// what `cfg` would build; sampling knobs (K, chain length) come from `cfg`.
pub fn load(dir: &Path, cfg: &RunConfig) -> Result<(CheckpointHeader, Agent)> {
    let header = CheckpointHeader::parse(&std::fs::read(dir.join("header.json"))?)?;
    let obs_dim = cfg.env.obs_dim();
    let expected = denoiser_layout(cfg, obs_dim);
    if header.obs_dim != obs_dim
        || header.history != cfg.diffusion.history
        || header.layout != expected
        || header.critic_hidden != cfg.learner.hidden()
    {
        return Err(Error::load(format!(
            "checkpoint dims (obs {}, history {}, layout {:?}, critics {:?}) do not match the config (obs {}, history {}, layout {:?}, critics {:?})",
            header.obs_dim,
            header.history,
            header.layout,
            header.critic_hidden,
            obs_dim,
            cfg.diffusion.history,
            expected,
            cfg.learner.hidden()
        )));
    }
    let mut sets = Vec::with_capacity(FILES.len());
    for name in FILES {
        sets.push(io::load(&dir.join(format!("{name}.bin")))?);
    }
    let mut sets = sets.into_iter();
    let mut next = || sets.next().unwrap();
    let denoiser = Denoiser::from_params(expected, vec![next(), next(), next()])?;
    let state_dim = encoded_width(obs_dim, ACTION_DIM, cfg.diffusion.history);
    let template = Td3::new(state_dim, ACTION_DIM, &cfg.learner.hidden(), cfg.learner.td3.clone(), 0)?;
    let load_err = |e: Error| Error::load(format!("checkpoint parameters do not fit: {e}"));
    let critic = |p| Mlp::from_params(template.critics.q1.spec().clone(), p).map_err(load_err);
    let actor = |p| Mlp::from_params(template.actor.net.spec().clone(), p).map_err(load_err);
    let critics = CriticPair::from_nets(critic(next())?, critic(next())?, ACTION_DIM)?;
    let actor_net = Actor::from_net(actor(next())?);
    let targets = CriticPair::from_nets(critic(next())?, critic(next())?, ACTION_DIM)?;
    let target_actor = Actor::from_net(actor(next())?);
    let mut learner = Td3::from_parts(cfg.learner.td3.clone(), critics, actor_net)?;
    learner.target_critics = targets;
    learner.target_actor = target_actor;
    let mut run = cfg.clone();
    run.variant = header.variant;
    let agent = Agent::assemble(&run, obs_dim, denoiser, learner)?;
    Ok((header, agent))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RunConfig {
        let mut c = RunConfig::default();
        c.diffusion.history = 1;
        c.diffusion.sample_steps = 4;
        c.diffusion.state_features = 6;
        c.diffusion.time_features = 6;
        c.diffusion.time_embed_width = 4;
        c.diffusion.hidden = 6;
        c.learner.width = 6;
        c
    }

    #[test]
    fn save_load_round_trip() {
        let cfg = tiny();
        let agent = Agent::new(&cfg, cfg.env.obs_dim()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save(dir.path(), &agent, &cfg, 3).unwrap();
        let (h, back) = load(dir.path(), &cfg).unwrap();
        assert_eq!(h.episode, 3);
        for ((_, a), (_, b)) in agent.param_sets().into_iter().zip(back.param_sets()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn incompatible_dims_are_load_errors() {
        let cfg = tiny();
        let agent = Agent::new(&cfg, cfg.env.obs_dim()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save(dir.path(), &agent, &cfg, 0).unwrap();
        let mut other = cfg.clone();
        other.diffusion.history = 2;
        assert!(matches!(load(dir.path(), &other), Err(Error::Load(_))));
        let mut wider = cfg.clone();
        wider.learner.width = 7;
        assert!(matches!(load(dir.path(), &wider), Err(Error::Load(_))));
    }

    #[test]
    fn header_rejects_garbage() {
        assert!(CheckpointHeader::parse(b"{}").is_err());
        assert!(CheckpointHeader::parse(b"not json").is_err());
        let cfg = tiny();
        let agent = Agent::new(&cfg, cfg.env.obs_dim()).unwrap();
        let mut h = CheckpointHeader::for_agent(&agent, &cfg, 0);
        let ok = serde_json::to_vec(&h).unwrap();
        assert_eq!(CheckpointHeader::parse(&ok).unwrap(), h);
        h.layout.state_dim += 1;
        assert!(CheckpointHeader::parse(&serde_json::to_vec(&h).unwrap()).is_err());
    }
}
