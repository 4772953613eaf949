//! Candidate plans taken from intermediate denoising stages and flown
//! open-loop from a common start.
//!
//! `stages.csv` columns: `stage,candidate,step,north,east,down`.
//! `stages_summary.csv` columns: `stage,dispersion`.
//! `stage_scores.csv` columns: `candidate,q,selected` (final stage).

use std::path::Path;

use super::agent::Agent;
use super::config::{RunConfig, Variant};
use super::table::{emit_csv, num};
use crate::diffusion::{clamp_unit, reverse_snapshots, History};
use crate::env::{distance, TaskEnv, ACTION_DIM};
use crate::error::{Error, Result};
use crate::rl::{argmax, select_plan};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct StageResult {
    pub stage: usize,
    pub plans: Vec<Vec<f64>>,
    /// Positions per candidate: the start, then one per decision.
    pub trajectories: Vec<Vec<[f64; 3]>>,
    pub dispersion: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StagesOutcome {
    pub stages: Vec<StageResult>,
    /// Scores of the final-stage candidates and the chosen index.
    pub final_q: Vec<f64>,
    pub selected: usize,
}

/// Mean over candidate pairs of the time-averaged distance between their trajectories.
pub fn dispersion(trajectories: &[Vec<[f64; 3]>]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..trajectories.len() {
        for j in i + 1..trajectories.len() {
            let (a, b) = (&trajectories[i], &trajectories[j]);
            let n = a.len().min(b.len());
            if n == 0 {
                continue;
            }
            total += (0..n).map(|k| distance(&a[k], &b[k])).sum::<f64>() / n as f64;
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

/// Flies one plan open-loop: its actions in order, then its last action held.
fn fly(start: &TaskEnv, plan: &[f64], horizon: usize) -> Result<Vec<[f64; 3]>> {
    let mut env = start.clone();
    let n = env.vehicles().len();
    let mut path = vec![env.vehicles()[0].position()];
    let steps = plan.len() / ACTION_DIM;
    for j in 0..horizon {
        let k = j.min(steps - 1);
        let a = plan[k * ACTION_DIM..(k + 1) * ACTION_DIM].to_vec();
        if !env.is_finished() {
            env.step(&vec![a; n])?;
        }
        path.push(env.vehicles()[0].position());
    }
    Ok(path)
}

pub fn stages(cfg: &RunConfig, agent: &Agent, seed: u64) -> Result<StagesOutcome> {
    if agent.variant != Variant::Diffusion {
        return Err(Error::usage("denoising stages need a diffusion checkpoint"));
    }
    let chain_len = agent.chain.len();
    if let Some(&bad) = cfg.stages.stages.iter().find(|&&s| s == 0 || s > chain_len) {
        return Err(Error::usage(format!("stage {bad} outside 1..={chain_len}")));
    }
    let env = TaskEnv::new(&cfg.env, seed)?;
    let obs = env.observe(0);
    let s = History::new(agent.history, cfg.env.obs_dim(), ACTION_DIM).encode(&obs)?;
    let mut wanted = cfg.stages.stages.clone();
    wanted.push(chain_len);
    let chain_seed = rng::mix(rng::mix(seed, rng::stream::EVAL), 7);
    let snaps = reverse_snapshots(&agent.denoiser, &s, agent.candidates, &agent.chain, chain_seed, &wanted)?;
    let mut results = Vec::with_capacity(cfg.stages.stages.len());
    for (&stage, raw) in cfg.stages.stages.iter().zip(&snaps) {
        let plans: Vec<Vec<f64>> = raw
            .iter()
            .map(|p| {
                let mut p = p.clone();
                clamp_unit(&mut p);
                p
            })
            .collect();
        let trajectories = plans.iter().map(|p| fly(&env, p, cfg.stages.horizon)).collect::<Result<Vec<_>>>()?;
        results.push(StageResult { stage, dispersion: dispersion(&trajectories), plans, trajectories });
    }
    let mut final_plans = snaps.last().unwrap().clone();
    final_plans.iter_mut().for_each(|p| clamp_unit(p));
    let sel = select_plan(&agent.learner.critics, &s, &final_plans)?;
    debug_assert_eq!(argmax(&sel.q_values), Some(sel.index));
    Ok(StagesOutcome { stages: results, final_q: sel.q_values, selected: sel.index })
}

/// Runs [`stages`] and writes its CSVs to `out`.
pub fn stages_to(cfg: &RunConfig, agent: &Agent, seed: u64, out: &Path) -> Result<StagesOutcome> {
    let res = stages(cfg, agent, seed)?;
    std::fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for st in &res.stages {
        for (c, path) in st.trajectories.iter().enumerate() {
            for (k, p) in path.iter().enumerate() {
                rows.push(vec![st.stage.to_string(), c.to_string(), k.to_string(), num(p[0]), num(p[1]), num(p[2])]);
            }
        }
    }
    emit_csv(&out.join("stages.csv"), &["stage", "candidate", "step", "north", "east", "down"], &rows)?;
    let summary: Vec<Vec<String>> = res.stages.iter().map(|s| vec![s.stage.to_string(), num(s.dispersion)]).collect();
    emit_csv(&out.join("stages_summary.csv"), &["stage", "dispersion"], &summary)?;
    let scores: Vec<Vec<String>> = res
        .final_q
        .iter()
        .enumerate()
        .map(|(i, q)| vec![i.to_string(), num(*q), ((i == res.selected) as u8).to_string()])
        .collect();
    emit_csv(&out.join("stage_scores.csv"), &["candidate", "q", "selected"], &scores)?;
    Ok(res)
}
