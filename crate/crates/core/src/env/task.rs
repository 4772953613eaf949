//! The learning environment: setpoint actions, low-level tracking at the
//! control rate, sea disturbances and the task world.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use super::world::{RewardWeights, StepReport, World, WorldConfig};
use crate::dynamics::{
    step_dynamics, AuvState, ControllerKind, Disturbance, DisturbanceModel, SeaCaps, SeaCondition, Setpoint, Tracker,
    TrackerConfig, VehicleParams,
};
use crate::error::{Error, Result};
use crate::rng;

/// Actions are `[heading change, depth change, throttle]` in `[-1, 1]`.
pub const ACTION_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub world: WorldConfig,
    pub vehicle: VehicleParams,
    pub tracker: TrackerConfig,
    pub controller: ControllerKind,
    pub sea: SeaCondition,
    pub es_caps: SeaCaps,
    pub ves_caps: SeaCaps,
    pub weights: RewardWeights,
    /// Control tick (s).
    pub dt: f64,
    /// Control ticks per decision.
    pub action_repeat: usize,
    /// Heading change at full action (rad).
    pub yaw_step: f64,
    /// Depth change at full action (m).
    pub depth_step: f64,
    /// Nearest unserved nodes in the observation.
    pub nearest: usize,
    /// Distance normalizer for node vectors (m).
    pub obs_range: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            world: WorldConfig::default(),
            vehicle: VehicleParams::default(),
            tracker: TrackerConfig::default(),
            controller: ControllerKind::SSurface,
            sea: SeaCondition::Ideal,
            es_caps: SeaCaps::ES,
            ves_caps: SeaCaps::VES,
            weights: RewardWeights::default(),
            dt: 0.05,
            action_repeat: 10,
            yaw_step: FRAC_PI_4,
            depth_step: 2.0,
            nearest: 3,
            obs_range: 50.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.vehicle.validate()?;
        self.tracker.gains.validate()?;
        self.weights.validate()?;
        for (k, c) in [("es", &self.es_caps), ("ves", &self.ves_caps)] {
            if !(c.current >= 0.0 && c.wave_amp >= 0.0 && c.wave_period > 0.0 && c.yaw_coupling >= 0.0) {
                return Err(Error::config(format!("{k}_current"), "sea caps must be non-negative with a positive period"));
            }
        }
        if self.ves_caps.current < self.es_caps.current || self.ves_caps.wave_amp < self.es_caps.wave_amp {
            return Err(Error::config("ves_current", "VES caps must not be milder than ES caps"));
        }
        for (k, v) in [("dt", self.dt), ("yaw_step", self.yaw_step), ("depth_step", self.depth_step), ("obs_range", self.obs_range)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("must be positive, got {v}")));
            }
        }
        if self.action_repeat == 0 {
            return Err(Error::config("action_repeat", "must be at least 1"));
        }
        if self.nearest == 0 {
            return Err(Error::config("nearest", "must be at least 1"));
        }
        Ok(())
    }

    pub fn caps(&self) -> SeaCaps {
        match self.sea {
            SeaCondition::Ideal => SeaCaps::IDEAL,
            SeaCondition::Es => self.es_caps,
            SeaCondition::Ves => self.ves_caps,
        }
    }

    /// Position (3), heading sin/cos and pitch (3), body velocities and yaw
    /// rate (4), nearest-node vectors (3 each), seabed clearance (1), current (3).
    pub fn obs_dim(&self) -> usize {
        14 + 3 * self.nearest
    }
}

/// Outcome of one decision step, aggregated over its control ticks.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvStep {
    pub reward: f64,
    pub ticks: Vec<StepReport>,
    /// Every node served: a true terminal state.
    pub done: bool,
    /// Step budget exhausted.
    pub truncated: bool,
}

impl EnvStep {
    pub fn finished(&self) -> bool {
        self.done || self.truncated
    }

    /// Component sums over the ticks; `reward` of the result is the sum of tick rewards.
    pub fn totals(&self) -> StepReport {
        let mut t = StepReport::default();
        for r in &self.ticks {
            t.drained += r.drained;
            t.rate += r.rate;
            t.newly_served += r.newly_served;
            t.power += r.power;
            t.collisions += r.collisions;
            t.reward += r.reward;
        }
        t
    }
}

#[derive(Clone, Debug)]
pub struct TaskEnv {
    cfg: EnvConfig,
    world: World,
    auvs: Vec<AuvState>,
    trackers: Vec<Tracker>,
    sea: DisturbanceModel,
    last_disturbance: Disturbance,
    steps: usize,
    seed: u64,
}

impl TaskEnv {
    pub fn new(cfg: &EnvConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let world = World::spawn(&cfg.world, seed)?;
        let trackers = (0..cfg.world.auv_count).map(|_| Tracker::new(cfg.controller, cfg.tracker.clone())).collect();
        let mut env = TaskEnv {
            cfg: cfg.clone(),
            world,
            auvs: Vec::new(),
            trackers,
            sea: DisturbanceModel::new(cfg.sea, cfg.caps(), seed),
            last_disturbance: Disturbance::zero(),
            steps: 0,
            seed,
        };
        env.place_vehicles();
        env.last_disturbance = env.sea.sample(0.0);
        Ok(env)
    }

    /// Fresh episode on a new world drawn from `seed`.
    pub fn reset(&mut self, seed: u64) -> Result<()> {
        *self = TaskEnv::new(&self.cfg, seed)?;
        Ok(())
    }

    fn place_vehicles(&mut self) {
        let mut rng = rng::seeded(rng::mix(self.seed, 1), rng::stream::ENV);
        let b = self.cfg.world.bounds;
        let sep = 4.0 * self.cfg.world.safety_margin;
        self.auvs.clear();
        while self.auvs.len() < self.cfg.world.auv_count {
            let s = AuvState::at(
                rng.gen_range(0.1 * b[0]..0.9 * b[0]),
                rng.gen_range(0.1 * b[1]..0.9 * b[1]),
                self.cfg.world.start_depth,
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            );
            if self.auvs.iter().all(|o| super::world::distance(&o.position(), &s.position()) >= sep) {
                self.auvs.push(s);
            }
        }
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn vehicles(&self) -> &[AuvState] {
        &self.auvs
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_finished(&self) -> bool {
        self.world.is_finished()
    }

    pub fn observe(&self, i: usize) -> Vec<f64> {
        let c = &self.cfg;
        let s = &self.auvs[i];
        let b = c.world.bounds;
        let mut o = Vec::with_capacity(c.obs_dim());
        o.extend([s.north / b[0], s.east / b[1], s.down / b[2]]);
        o.extend([s.yaw.sin(), s.yaw.cos(), s.pitch / c.vehicle.max_pitch]);
        o.extend([
            s.surge / c.vehicle.max_speed,
            s.sway / c.vehicle.max_speed,
            s.heave / c.vehicle.max_speed,
            s.yaw_rate / c.vehicle.max_yaw_rate,
        ]);
        let pos = s.position();
        let near = self.world.nearest_unserved(&pos, c.nearest);
        let (sy, cy) = s.yaw.sin_cos();
        for k in 0..c.nearest {
            match near.get(k) {
                Some(&j) => {
                    let p = self.world.nodes[j].position;
                    let (dn, de, dd) = (p[0] - pos[0], p[1] - pos[1], p[2] - pos[2]);
                    o.extend([(cy * dn + sy * de) / c.obs_range, (-sy * dn + cy * de) / c.obs_range, dd / c.obs_range]);
                }
                None => o.extend([0.0; 3]),
            }
        }
        o.push((self.world.seabed.depth(s.north, s.east) - s.down) / b[2]);
        o.extend(self.last_disturbance.current);
        o
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        (0..self.auvs.len()).map(|i| self.observe(i)).collect()
    }

    /// Setpoints for one vehicle from a normalized action.
    pub fn setpoint(&self, i: usize, action: &[f64]) -> Setpoint {
        let s = &self.auvs[i];
        let a = |k: usize| action[k].clamp(-1.0, 1.0);
        Setpoint {
            yaw: s.yaw + a(0) * self.cfg.yaw_step,
            depth: (s.down + a(1) * self.cfg.depth_step).clamp(0.0, self.cfg.world.bounds[2]),
            rpm: 0.5 * (a(2) + 1.0) * self.cfg.vehicle.max_rpm,
        }
    }

    /// Holds one action per vehicle for `action_repeat` control ticks.
    pub fn step(&mut self, actions: &[Vec<f64>]) -> Result<EnvStep> {
        if self.world.is_finished() {
            return Err(Error::usage("step called on a finished episode; reset first"));
        }
        if actions.len() != self.auvs.len() {
            return Err(Error::shape("actions per vehicle", self.auvs.len(), actions.len()));
        }
        for a in actions {
            if a.len() != ACTION_DIM {
                return Err(Error::shape("action width", ACTION_DIM, a.len()));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::usage("non-finite action"));
            }
        }
        let setpoints: Vec<Setpoint> = (0..self.auvs.len()).map(|i| self.setpoint(i, &actions[i])).collect();
        let dt = self.cfg.dt;
        let b = self.cfg.world.bounds;
        let mut ticks = Vec::with_capacity(self.cfg.action_repeat);
        let mut reward = 0.0;
        for _ in 0..self.cfg.action_repeat {
            let dist = self.sea.sample(self.world.elapsed());
            let mut rpms = Vec::with_capacity(self.auvs.len());
            for (i, s) in self.auvs.iter_mut().enumerate() {
                let cmd = self.trackers[i].track_step(&setpoints[i], s, dt, &self.cfg.vehicle);
                let mut next = step_dynamics(s, &cmd, &dist, dt, &self.cfg.vehicle)?;
                next.north = next.north.clamp(0.0, b[0]);
                next.east = next.east.clamp(0.0, b[1]);
                next.down = next.down.clamp(0.0, b[2]);
                *s = next;
                rpms.push(cmd.rpm);
            }
            self.last_disturbance = dist;
            let r = self.world.step_task(&self.auvs, &rpms, &self.cfg.weights, dt)?;
            reward += r.reward;
            ticks.push(r);
            if self.world.all_served() {
                break;
            }
        }
        self.steps += 1;
        let done = self.world.all_served();
        let truncated = !done && self.steps >= self.cfg.world.episode_steps;
        if done || truncated {
            self.world.finish();
        }
        Ok(EnvStep { reward, ticks, done, truncated })
    }

    pub fn snapshot(&self) -> serde_json::Value {
        self.world.snapshot(&self.auvs, 21)
    }
}
