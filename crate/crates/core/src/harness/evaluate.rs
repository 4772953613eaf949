//! Frozen-policy rollouts summarized per sea condition and controller.
//!
//! `eval_summary.csv` columns: `sea,controller,episodes,` then
//! `{reward,sdr,ec,ssn,collisions}_{mean,std}` (sample standard deviation).

use std::path::Path;

use super::agent::{Agent, Mode};
use super::checkpoint;
use super::config::RunConfig;
use super::table::{emit_csv, num};
use crate::diffusion::History;
use crate::dynamics::{ControllerKind, SeaCondition};
use crate::env::{EnvConfig, Metrics, TaskEnv, ACTION_DIM};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return MeanStd::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        MeanStd { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub sea: SeaCondition,
    pub controller: ControllerKind,
    pub episodes: usize,
    pub reward: MeanStd,
    pub sdr: MeanStd,
    pub ec: MeanStd,
    pub ssn: MeanStd,
    pub collisions: MeanStd,
}

pub const EVAL_COLUMNS: [&str; 13] = [
    "sea",
    "controller",
    "episodes",
    "reward_mean",
    "reward_std",
    "sdr_mean",
    "sdr_std",
    "ec_mean",
    "ec_std",
    "ssn_mean",
    "ssn_std",
    "collisions_mean",
    "collisions_std",
];

impl EvalRow {
    fn fields(&self) -> Vec<String> {
        let mut f = vec![self.sea.to_string(), self.controller.to_string(), self.episodes.to_string()];
        for m in [self.reward, self.sdr, self.ec, self.ssn, self.collisions] {
            f.push(num(m.mean));
            f.push(num(m.std));
        }
        f
    }
}

/// Greedy rollout of one episode; returns the summed reward and metrics.
pub fn rollout(agent: &Agent, env_cfg: &EnvConfig, world_seed: u64, decision_seed: u64) -> Result<(f64, Metrics)> {
    let mut env = TaskEnv::new(env_cfg, world_seed)?;
    let obs_dim = env_cfg.obs_dim();
    let n = env.vehicles().len();
    let mut hist: Vec<History> = (0..n).map(|_| History::new(agent.history, obs_dim, ACTION_DIM)).collect();
    let mut obs = env.observations();
    let mut unused = rng::seeded(decision_seed, rng::stream::EVAL);
    let mut total = 0.0;
    let mut k = 0u64;
    loop {
        let mut actions = Vec::with_capacity(n);
        for i in 0..n {
            let s = hist[i].encode(&obs[i])?;
            actions.push(agent.decide(&s, Mode::Greedy, rng::mix(decision_seed, k), &mut unused)?.action);
            k += 1;
        }
        let r = env.step(&actions)?;
        total += r.reward;
        let next = env.observations();
        for i in 0..n {
            hist[i].push(&obs[i], &actions[i])?;
        }
        obs = next;
        if r.finished() {
            break;
        }
    }
    Ok((total, env.world().episode_metrics()?))
}

/// World seed of evaluation episode `e`; shared by every condition and
/// controller so their rows are paired.
pub fn eval_seed(seed: u64, e: usize) -> u64 {
    rng::mix(rng::mix(seed, rng::stream::EVAL), e as u64)
}

pub fn evaluate(
    cfg: &RunConfig,
    agent: &Agent,
    episodes: usize,
    seas: &[SeaCondition],
    controllers: &[ControllerKind],
) -> Result<Vec<EvalRow>> {
    if episodes == 0 {
        return Err(Error::usage("evaluation needs at least one episode"));
    }
    let mut rows = Vec::new();
    for &sea in seas {
        for &controller in controllers {
            let mut env_cfg = cfg.env.clone();
            env_cfg.sea = sea;
            env_cfg.controller = controller;
            let mut cols: [Vec<f64>; 5] = Default::default();
            for e in 0..episodes {
                let seed = eval_seed(cfg.seed, e);
                let (reward, m) = rollout(agent, &env_cfg, seed, rng::mix(seed, 17))?;
                for (c, v) in cols.iter_mut().zip([reward, m.sdr, m.ec, m.ssn as f64, m.collisions as f64]) {
                    c.push(v);
                }
            }
            rows.push(EvalRow {
                sea,
                controller,
                episodes,
                reward: MeanStd::of(&cols[0]),
                sdr: MeanStd::of(&cols[1]),
                ec: MeanStd::of(&cols[2]),
                ssn: MeanStd::of(&cols[3]),
                collisions: MeanStd::of(&cols[4]),
            });
        }
    }
    Ok(rows)
}

/// Loads a checkpoint, evaluates it and writes `eval_summary.csv` to `out`.
pub fn evaluate_checkpoint(
    cfg: &RunConfig,
    dir: &Path,
    out: &Path,
    episodes: usize,
    seas: &[SeaCondition],
    controllers: &[ControllerKind],
) -> Result<Vec<EvalRow>> {
    if episodes == 0 {
        return Err(Error::usage("evaluation needs at least one episode"));
    }
    let (_, agent) = checkpoint::load(dir, cfg)?;
    let rows = evaluate(cfg, &agent, episodes, seas, controllers)?;
    std::fs::create_dir_all(out)?;
    let table: Vec<Vec<String>> = rows.iter().map(EvalRow::fields).collect();
    emit_csv(&out.join("eval_summary.csv"), &EVAL_COLUMNS, &table)?;
    Ok(rows)
}
