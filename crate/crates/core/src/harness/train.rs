//! The joint training loop.
//!
//! Outputs under `cfg.out`:
//! - `config.txt`: the full configuration in `key = value` form.
//! - `episodes.csv`: `episode,reward,sdr,ec,ssn,collisions,steps,updates,diffusion_loss,critic1_loss,critic2_loss,actor_loss`
//!   (mean losses over the episode's updates, 0 when there were none).
//! - `decisions.csv` (if `log_decisions`): `episode,step,auv,chosen,q_chosen,q_max,q0..q{K-1}`.
//! - `timing.csv`: `episode,wall_seconds`; kept apart so the other files are reproducible.
//! - `world.json`: the first episode's world.
//! - `checkpoints/ep{NNNNN}/` every `checkpoint_every` episodes and `checkpoints/final/`.

use std::collections::VecDeque;
use std::time::Instant;

use super::agent::{Agent, Decision, Mode};
use super::checkpoint;
use super::config::RunConfig;
use super::table::{num, CsvOut};
use crate::diffusion::{EncodedState, History};
use crate::env::{Metrics, TaskEnv, ACTION_DIM};
use crate::error::{Error, Result};
use crate::rl::{ReplayBuffer, Transition};
use crate::rng;

pub const EPISODE_COLUMNS: [&str; 12] = [
    "episode",
    "reward",
    "sdr",
    "ec",
    "ssn",
    "collisions",
    "steps",
    "updates",
    "diffusion_loss",
    "critic1_loss",
    "critic2_loss",
    "actor_loss",
];

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub reward: f64,
    pub metrics: Metrics,
    pub steps: usize,
    pub updates: usize,
    pub diffusion_loss: f64,
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: f64,
}

impl EpisodeRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.episode.to_string(),
            num(self.reward),
            num(self.metrics.sdr),
            num(self.metrics.ec),
            self.metrics.ssn.to_string(),
            self.metrics.collisions.to_string(),
            self.steps.to_string(),
            self.updates.to_string(),
            num(self.diffusion_loss),
            num(self.critic1_loss),
            num(self.critic2_loss),
            num(self.actor_loss),
        ]
    }
}

/// Selection bookkeeping over every decision of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SelectionAudit {
    pub decisions: usize,
    /// Decisions whose chosen score is not the maximum of the logged scores.
    pub violations: usize,
}

pub struct TrainOutcome {
    pub rows: Vec<EpisodeRow>,
    pub agent: Agent,
    pub audit: SelectionAudit,
    /// Diffusion loss of every update in order.
    pub diffusion_losses: Vec<f64>,
}

/// Seed of the world for a training episode.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    rng::mix(rng::mix(seed, rng::stream::ENV), episode as u64)
}

#[derive(Default)]
struct Running {
    n: usize,
    sum: f64,
}

impl Running {
    fn add(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }
}

/// Transitions waiting for the rest of their executed action plan.
struct PlanQueue {
    horizon: usize,
    pending: VecDeque<Transition>,
}

impl PlanQueue {
    fn new(horizon: usize) -> Self {
        PlanQueue { horizon, pending: VecDeque::new() }
    }

    fn push(&mut self, t: Transition, buffer: &mut ReplayBuffer) -> Result<()> {
        let act = t.action.clone();
        self.pending.push_back(t);
        for p in self.pending.iter_mut() {
            p.plan.extend_from_slice(&act);
        }
        while self.pending.front().is_some_and(|p| p.plan.len() == self.horizon * ACTION_DIM) {
            buffer.push(self.pending.pop_front().unwrap())?;
        }
        Ok(())
    }

    /// Episode end: pads open plans by holding their last action.
    fn flush(&mut self, buffer: &mut ReplayBuffer) -> Result<()> {
        while let Some(mut p) = self.pending.pop_front() {
            let last = p.plan[p.plan.len() - ACTION_DIM..].to_vec();
            while p.plan.len() < self.horizon * ACTION_DIM {
                p.plan.extend_from_slice(&last);
            }
            buffer.push(p)?;
        }
        Ok(())
    }
}

pub fn train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let out = &cfg.out;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.txt"), cfg.emit())?;
    let mut episodes_csv = CsvOut::create(&out.join("episodes.csv"), &EPISODE_COLUMNS)?;
    let mut timing_csv = CsvOut::create(&out.join("timing.csv"), &["episode", "wall_seconds"])?;
    let k = match cfg.variant {
        super::config::Variant::Diffusion => cfg.diffusion.candidates,
        super::config::Variant::Vanilla => 1,
    };
    let mut decisions_csv = if cfg.log_decisions {
        let mut header: Vec<String> = ["episode", "step", "auv", "chosen", "q_chosen", "q_max"].iter().map(|s| s.to_string()).collect();
        header.extend((0..k).map(|i| format!("q{i}")));
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        Some(CsvOut::create(&out.join("decisions.csv"), &refs)?)
    } else {
        None
    };

    let obs_dim = cfg.env.obs_dim();
    let mut agent = Agent::new(cfg, obs_dim)?;
    let mut buffer = ReplayBuffer::new(cfg.learner.buffer_capacity)?;
    let mut learn_rng = rng::seeded(cfg.seed, rng::stream::LEARNER);
    let mut explore_rng = rng::seeded(cfg.seed, rng::stream::POLICY);
    let decision_seed = rng::mix(cfg.seed, rng::stream::POLICY);
    let mut global_step = 0usize;
    let mut decision_index = 0u64;
    let mut rows = Vec::with_capacity(cfg.episodes);
    let mut audit = SelectionAudit::default();
    let mut diffusion_losses = Vec::new();

    for episode in 0..cfg.episodes {
        let started = Instant::now();
        let mut env = TaskEnv::new(&cfg.env, episode_seed(cfg.seed, episode))?;
        if episode == 0 {
            let mut snap = serde_json::to_string_pretty(&env.snapshot()).map_err(|e| Error::Training(e.to_string()))?;
            snap.push('\n');
            std::fs::write(out.join("world.json"), snap)?;
        }
        let n_auv = env.vehicles().len();
        let mut histories: Vec<History> = (0..n_auv).map(|_| History::new(cfg.diffusion.history, obs_dim, ACTION_DIM)).collect();
        let mut queues: Vec<PlanQueue> = (0..n_auv).map(|_| PlanQueue::new(cfg.diffusion.horizon)).collect();
        let mut obs = env.observations();
        let mut reward_sum = 0.0;
        let (mut dl, mut c1, mut c2, mut al) = (Running::default(), Running::default(), Running::default(), Running::default());
        let mut updates = 0usize;
        let mut step = 0usize;
        loop {
            let mode = if global_step < cfg.learner.warmup_steps { Mode::Warmup } else { Mode::Explore };
            let mut states: Vec<EncodedState> = Vec::with_capacity(n_auv);
            let mut decisions: Vec<Decision> = Vec::with_capacity(n_auv);
            for i in 0..n_auv {
                let s = histories[i].encode(&obs[i])?;
                let d = agent.decide(&s, mode, rng::mix(decision_seed, decision_index), &mut explore_rng)?;
                decision_index += 1;
                audit.decisions += 1;
                let q_max = d.q_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if d.q_values[d.index] != q_max {
                    audit.violations += 1;
                }
                if let Some(w) = decisions_csv.as_mut() {
                    let mut f = vec![
                        episode.to_string(),
                        step.to_string(),
                        i.to_string(),
                        d.index.to_string(),
                        num(d.q_values[d.index]),
                        num(q_max),
                    ];
                    f.extend(d.q_values.iter().map(|q| num(*q)));
                    w.row(&f)?;
                }
                states.push(s);
                decisions.push(d);
            }
            let actions: Vec<Vec<f64>> = decisions.iter().map(|d| d.action.clone()).collect();
            let result = env.step(&actions)?;
            reward_sum += result.reward;
            let next_obs = env.observations();
            for i in 0..n_auv {
                histories[i].push(&obs[i], &actions[i])?;
                let next_state = histories[i].encode(&next_obs[i])?;
                let t = Transition {
                    state: states[i].clone(),
                    action: actions[i].clone(),
                    reward: result.reward * cfg.learner.reward_scale,
                    next_state,
                    done: result.done,
                    plan: Vec::with_capacity(cfg.diffusion.horizon * ACTION_DIM),
                };
                queues[i].push(t, &mut buffer)?;
            }
            obs = next_obs;
            global_step += 1;
            step += 1;
            if global_step > cfg.learner.warmup_steps && !buffer.is_empty() {
                for _ in 0..cfg.learner.updates_per_step {
                    let l = agent.learn(&buffer, cfg.learner.batch, &mut learn_rng)?;
                    updates += 1;
                    if let Some(d) = l.diffusion {
                        dl.add(d);
                        diffusion_losses.push(d);
                    }
                    c1.add(l.critic1);
                    c2.add(l.critic2);
                    if let Some(a) = l.actor {
                        al.add(a);
                    }
                }
            }
            if result.finished() {
                break;
            }
        }
        for q in queues.iter_mut() {
            q.flush(&mut buffer)?;
        }
        let row = EpisodeRow {
            episode,
            reward: reward_sum,
            metrics: env.world().episode_metrics()?,
            steps: step,
            updates,
            diffusion_loss: dl.mean(),
            critic1_loss: c1.mean(),
            critic2_loss: c2.mean(),
            actor_loss: al.mean(),
        };
        episodes_csv.row(&row.fields())?;
        rows.push(row);
        timing_csv.row(&[episode.to_string(), num(started.elapsed().as_secs_f64())])?;
        if cfg.checkpoint_every > 0 && (episode + 1) % cfg.checkpoint_every == 0 {
            checkpoint::save(&out.join("checkpoints").join(format!("ep{:05}", episode + 1)), &agent, cfg, episode + 1)?;
        }
    }
    episodes_csv.finish()?;
    timing_csv.finish()?;
    if let Some(w) = decisions_csv {
        w.finish()?;
    }
    checkpoint::save(&out.join("checkpoints").join("final"), &agent, cfg, cfg.episodes)?;
    Ok(TrainOutcome { rows, agent, audit, diffusion_losses })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_queue_collects_executed_actions() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        let mut q = PlanQueue::new(2);
        let t = |a: f64| Transition {
            state: EncodedState(vec![a]),
            action: vec![a; 3],
            reward: 0.0,
            next_state: EncodedState(vec![a]),
            done: false,
            plan: vec![],
        };
        q.push(t(1.0), &mut buf).unwrap();
        assert_eq!(buf.len(), 0);
        q.push(t(2.0), &mut buf).unwrap();
        assert_eq!(buf.get(0).unwrap().plan, vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        q.flush(&mut buf).unwrap();
        assert_eq!(buf.get(1).unwrap().plan, vec![2.0; 6]);
    }
}
