//! Closed-loop setpoint tracking with the low-level controllers.
//!
//! `track_{controller}.csv` columns: `t,yaw_ref,yaw,yaw_error,depth_ref,depth,depth_error,rudder,stern`
//! (radians, meters). `track_summary.csv` columns: `controller,sea,yaw_mse,yaw_abs_mean,yaw_abs_std,`
//! `depth_mse,depth_abs_mean,depth_abs_std,rudder_flips,stern_flips`.

use std::path::Path;

use super::config::RunConfig;
use super::evaluate::MeanStd;
use super::table::{emit_csv, num};
use crate::dynamics::{
    sign_flips, step_dynamics, wrap_angle, AuvState, ControllerKind, DisturbanceModel, Setpoint, Tracker,
};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackRow {
    pub t: f64,
    pub yaw_ref: f64,
    pub yaw: f64,
    pub yaw_error: f64,
    pub depth_ref: f64,
    pub depth: f64,
    pub depth_error: f64,
    pub rudder: f64,
    pub stern: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackSummary {
    pub controller: ControllerKind,
    pub yaw_mse: f64,
    pub yaw_abs: MeanStd,
    pub depth_mse: f64,
    pub depth_abs: MeanStd,
    pub rudder_flips: usize,
    pub stern_flips: usize,
}

impl TrackSummary {
    pub fn flips(&self) -> usize {
        self.rudder_flips + self.stern_flips
    }
}

pub const TRACK_COLUMNS: [&str; 9] = ["t", "yaw_ref", "yaw", "yaw_error", "depth_ref", "depth", "depth_error", "rudder", "stern"];
pub const SUMMARY_COLUMNS: [&str; 10] = [
    "controller",
    "sea",
    "yaw_mse",
    "yaw_abs_mean",
    "yaw_abs_std",
    "depth_mse",
    "depth_abs_mean",
    "depth_abs_std",
    "rudder_flips",
    "stern_flips",
];

/// Flies the configured yaw/depth profile at the cruise rpm under the
/// configured sea; `seed` drives the disturbance.
pub fn track(cfg: &RunConfig, controller: ControllerKind, seed: u64) -> Result<(Vec<TrackRow>, TrackSummary)> {
    cfg.validate()?;
    let env = &cfg.env;
    let tc = &cfg.track;
    let p = &env.vehicle;
    let mut sea = DisturbanceModel::new(env.sea, env.caps(), seed);
    let mut tracker = Tracker::new(controller, env.tracker.clone());
    let mut s = AuvState { down: tc.start_depth, surge: p.max_speed * tc.rpm / p.max_rpm, ..Default::default() };
    let dt = env.dt;
    let ticks = (tc.duration / dt).round() as usize;
    let mut rows = Vec::with_capacity(ticks);
    for k in 0..ticks {
        let t = k as f64 * dt;
        let sp = Setpoint { yaw: tc.yaw.value_at(t), depth: tc.depth.value_at(t), rpm: tc.rpm };
        let cmd = tracker.track_step(&sp, &s, dt, p);
        s = step_dynamics(&s, &cmd, &sea.sample(t), dt, p)?;
        let t_next = t + dt;
        let (yaw_ref, depth_ref) = (tc.yaw.value_at(t_next), tc.depth.value_at(t_next));
        rows.push(TrackRow {
            t: t_next,
            yaw_ref,
            yaw: s.yaw,
            yaw_error: wrap_angle(yaw_ref - s.yaw),
            depth_ref,
            depth: s.down,
            depth_error: depth_ref - s.down,
            rudder: cmd.rudder,
            stern: cmd.stern,
        });
    }
    let ye: Vec<f64> = rows.iter().map(|r| r.yaw_error.abs()).collect();
    let de: Vec<f64> = rows.iter().map(|r| r.depth_error.abs()).collect();
    let mse = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64;
    let rudder: Vec<f64> = rows.iter().map(|r| r.rudder).collect();
    let stern: Vec<f64> = rows.iter().map(|r| r.stern).collect();
    let summary = TrackSummary {
        controller,
        yaw_mse: mse(&ye),
        yaw_abs: MeanStd::of(&ye),
        depth_mse: mse(&de),
        depth_abs: MeanStd::of(&de),
        rudder_flips: sign_flips(&rudder),
        stern_flips: sign_flips(&stern),
    };
    Ok((rows, summary))
}

/// Runs [`track`] for each controller and writes the CSVs to `out`.
pub fn track_to(cfg: &RunConfig, controllers: &[ControllerKind], seed: u64, out: &Path) -> Result<Vec<TrackSummary>> {
    std::fs::create_dir_all(out)?;
    let mut summaries = Vec::new();
    let mut table = Vec::new();
    for &c in controllers {
        let (rows, s) = track(cfg, c, seed)?;
        let series: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                [r.t, r.yaw_ref, r.yaw, r.yaw_error, r.depth_ref, r.depth, r.depth_error, r.rudder, r.stern]
                    .iter()
                    .map(|v| num(*v))
                    .collect()
            })
            .collect();
        emit_csv(&out.join(format!("track_{c}.csv")), &TRACK_COLUMNS, &series)?;
        table.push(vec![
            c.to_string(),
            cfg.env.sea.to_string(),
            num(s.yaw_mse),
            num(s.yaw_abs.mean),
            num(s.yaw_abs.std),
            num(s.depth_mse),
            num(s.depth_abs.mean),
            num(s.depth_abs.std),
            s.rudder_flips.to_string(),
            s.stern_flips.to_string(),
        ]);
        summaries.push(s);
    }
    emit_csv(&out.join("track_summary.csv"), &SUMMARY_COLUMNS, &table)?;
    Ok(summaries)
}
