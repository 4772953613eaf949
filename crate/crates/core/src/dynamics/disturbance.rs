//! Sea-state disturbance processes.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use rand::Rng as _;

/// Additive disturbance for one control tick: water current (world frame,
/// m/s), wave-induced body accelerations (m/s^2) and a yaw acceleration
/// (rad/s^2).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub current: [f64; 3],
    pub wave_accel: [f64; 3],
    pub wave_yaw_accel: f64,
    pub seed: u64,
}

impl Disturbance {
    pub fn zero() -> Self {
        Self::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeaCondition {
    Ideal,
    Es,
    Ves,
}

impl SeaCondition {
    pub const ALL: [SeaCondition; 3] = [SeaCondition::Ideal, SeaCondition::Es, SeaCondition::Ves];
}

impl fmt::Display for SeaCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeaCondition::Ideal => "ideal",
            SeaCondition::Es => "es",
            SeaCondition::Ves => "ves",
        })
    }
}

impl FromStr for SeaCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" => Ok(SeaCondition::Ideal),
            "es" => Ok(SeaCondition::Es),
            "ves" => Ok(SeaCondition::Ves),
            other => Err(Error::config("sea", format!("unknown sea condition `{other}` (ideal|es|ves)"))),
        }
    }
}

/// Severity caps of one sea condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeaCaps {
    /// Current speed cap, m/s.
    pub current: f64,
    /// Wave acceleration amplitude, m/s^2.
    pub wave_amp: f64,
    /// Wave period, s.
    pub wave_period: f64,
    /// Yaw acceleration per unit wave acceleration, rad/m.
    pub yaw_coupling: f64,
}

impl SeaCaps {
    pub const IDEAL: SeaCaps = SeaCaps { current: 0.0, wave_amp: 0.0, wave_period: 1.0, yaw_coupling: 0.0 };
    pub const ES: SeaCaps = SeaCaps { current: 0.5, wave_amp: 0.3, wave_period: 8.0, yaw_coupling: 0.1 };
    pub const VES: SeaCaps = SeaCaps { current: 1.0, wave_amp: 0.6, wave_period: 6.0, yaw_coupling: 0.1 };
}

/// Mean-reversion rate of the current process, 1/s.
const CURRENT_REVERSION: f64 = 1.0 / 20.0;
/// Vertical current is this fraction of the horizontal scale.
const VERTICAL_FRACTION: f64 = 0.2;

/// Stateful disturbance generator: an Ornstein-Uhlenbeck current capped at
/// the condition's limit, plus a seeded-phase sinusoidal wave.
#[derive(Clone, Debug)]
pub struct DisturbanceModel {
    condition: SeaCondition,
    caps: SeaCaps,
    seed: u64,
    rng: Rng,
    current: [f64; 3],
    wave_dir: [f64; 3],
    wave_phase: f64,
    yaw_phase: f64,
    last_t: Option<f64>,
}

impl DisturbanceModel {
    pub fn new(condition: SeaCondition, caps: SeaCaps, seed: u64) -> Self {
        let caps = if condition == SeaCondition::Ideal { SeaCaps::IDEAL } else { caps };
        let mut rng = rng::seeded(seed, rng::stream::DISTURBANCE);
        let lateral: f64 = rng.gen_range(-0.4..0.4);
        let wave_dir = [0.0, lateral, (1.0 - lateral * lateral).sqrt()];
        let wave_phase = rng.gen_range(0.0..2.0 * PI);
        let yaw_phase = rng.gen_range(0.0..2.0 * PI);
        // Start from the stationary distribution, then cap.
        let sd = 0.5 * caps.current;
        let mut current = [
            sd * rng::gaussian(&mut rng),
            sd * rng::gaussian(&mut rng),
            VERTICAL_FRACTION * sd * rng::gaussian(&mut rng),
        ];
        cap_norm(&mut current, caps.current);
        DisturbanceModel {
            condition,
            caps,
            seed,
            rng,
            current,
            wave_dir,
            wave_phase,
            yaw_phase,
            last_t: None,
        }
    }

    pub fn condition(&self) -> SeaCondition {
        self.condition
    }

    pub fn caps(&self) -> SeaCaps {
        self.caps
    }

    /// Disturbance at time `t` (seconds). Times should be non-decreasing;
    /// the current advances by the elapsed time since the previous call.
    pub fn sample(&mut self, t: f64) -> Disturbance {
        if self.condition == SeaCondition::Ideal {
            return Disturbance { seed: self.seed, ..Disturbance::zero() };
        }
        let dt = self.last_t.map_or(0.0, |prev| (t - prev).max(0.0));
        self.last_t = Some(t);
        if dt > 0.0 {
            let sd = 0.5 * self.caps.current;
            let diffusion = sd * (2.0 * CURRENT_REVERSION * dt).sqrt();
            for (i, c) in self.current.iter_mut().enumerate() {
                let scale = if i == 2 { VERTICAL_FRACTION } else { 1.0 };
                *c += -CURRENT_REVERSION * *c * dt + scale * diffusion * rng::gaussian(&mut self.rng);
            }
            cap_norm(&mut self.current, self.caps.current);
        }
        let omega = 2.0 * PI / self.caps.wave_period;
        let w = self.caps.wave_amp * (omega * t + self.wave_phase).sin();
        Disturbance {
            current: self.current,
            wave_accel: [w * self.wave_dir[0], w * self.wave_dir[1], w * self.wave_dir[2]],
            wave_yaw_accel: self.caps.yaw_coupling * self.caps.wave_amp * (omega * t + self.yaw_phase).sin(),
            seed: self.seed,
        }
    }
}

fn cap_norm(v: &mut [f64; 3], cap: f64) {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n > cap {
        let k = if n > 0.0 { cap / n } else { 0.0 };
        v.iter_mut().for_each(|x| *x *= k);
    }
}

pub fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}
