//! Low-level heading/depth control laws and the two-channel tracker.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use super::vehicle::{wrap_angle, ActuatorCommand, AuvState, VehicleParams};
use crate::error::{Error, Result};

/// Bound on the S-Surface disturbance bias.
pub const DELTA_U_CAP: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    pub zeta1: f64,
    pub zeta2: f64,
    /// Gain on the windowed mean error that forms the S-Surface bias.
    pub delta_gain: f64,
    /// Window length (ticks) of the bias estimate.
    pub delta_window: usize,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// SMC surface slope.
    pub lambda: f64,
    /// SMC switching gain.
    pub eta: f64,
    /// SMC boundary-layer width.
    pub phi: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        ControllerGains {
            zeta1: 2.0,
            zeta2: 2.0,
            delta_gain: 0.05,
            delta_window: 40,
            kp: 0.4,
            ki: 0.02,
            kd: 0.6,
            lambda: 0.5,
            eta: 1.0,
            phi: 0.05,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("zeta1", self.zeta1), ("zeta2", self.zeta2), ("smc_eta", self.eta), ("smc_phi", self.phi)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("must be positive, got {v}")));
            }
        }
        for (k, v) in [
            ("delta_gain", self.delta_gain),
            ("pid_kp", self.kp),
            ("pid_ki", self.ki),
            ("pid_kd", self.kd),
            ("smc_lambda", self.lambda),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("must be non-negative, got {v}")));
            }
        }
        if self.delta_window == 0 {
            return Err(Error::config("delta_window", "must be at least 1"));
        }
        Ok(())
    }
}

/// `2 / (1 + exp(-zeta1 e - zeta2 edot)) - 1 + delta_u`, evaluated as the
/// identical `tanh((zeta1 e + zeta2 edot) / 2)` so that odd symmetry is exact.
pub fn s_surface(e: f64, edot: f64, gains: &ControllerGains, delta_u: f64) -> f64 {
    (0.5 * (gains.zeta1 * e + gains.zeta2 * edot)).tanh() + delta_u
}

/// `clamp(k * mean(window), +-0.3)`; an empty window gives no bias.
pub fn estimate_delta_u(window: &[f64], gain: f64) -> f64 {
    if window.is_empty() {
        return 0.0;
    }
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    (gain * mean).clamp(-DELTA_U_CAP, DELTA_U_CAP)
}

pub fn pid_control(e: f64, e_int: f64, edot: f64, gains: &ControllerGains) -> f64 {
    (gains.kp * e + gains.ki * e_int + gains.kd * edot).clamp(-1.0, 1.0)
}

/// Boundary-layer sliding mode law. Here `e` is measured minus reference,
/// so the surface `edot + lambda e` is driven to zero by `-eta sat(s / phi)`.
pub fn smc_control(e: f64, edot: f64, gains: &ControllerGains) -> f64 {
    let sigma = edot + gains.lambda * e;
    (-gains.eta * (sigma / gains.phi).clamp(-1.0, 1.0)).clamp(-1.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControllerKind {
    SSurface,
    Pid,
    Smc,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::SSurface, ControllerKind::Pid, ControllerKind::Smc];
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerKind::SSurface => "ssurface",
            ControllerKind::Pid => "pid",
            ControllerKind::Smc => "smc",
        })
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssurface" | "s-surface" | "s_surface" => Ok(ControllerKind::SSurface),
            "pid" => Ok(ControllerKind::Pid),
            "smc" => Ok(ControllerKind::Smc),
            other => Err(Error::config("controller", format!("unknown controller `{other}` (ssurface|pid|smc)"))),
        }
    }
}

/// Scaling from physical channel errors to controller units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub gains: ControllerGains,
    /// Yaw error multiplier (default: radians to degrees).
    pub yaw_scale: f64,
    /// Depth error multiplier (default: meters).
    pub depth_scale: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig { gains: ControllerGains::default(), yaw_scale: 180.0 / std::f64::consts::PI, depth_scale: 1.0 }
    }
}

/// Setpoints handed to the low-level loop.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Setpoint {
    pub yaw: f64,
    pub depth: f64,
    pub rpm: f64,
}

#[derive(Clone, Debug, Default)]
struct Channel {
    prev: Option<f64>,
    integral: f64,
    window: VecDeque<f64>,
}

impl Channel {
    /// `e` is reference minus measurement in controller units; `delta` the
    /// measurement change since the last tick in the same units.
    fn command(&mut self, kind: ControllerKind, e: f64, edot: f64, g: &ControllerGains, dt: f64) -> f64 {
        match kind {
            ControllerKind::SSurface => {
                let bias = estimate_delta_u(self.window.make_contiguous(), g.delta_gain);
                if self.window.len() == g.delta_window {
                    self.window.pop_front();
                }
                self.window.push_back(e);
                s_surface(e, edot, g, bias).clamp(-1.0, 1.0)
            }
            ControllerKind::Pid => {
                let u = pid_control(e, self.integral, edot, g);
                let next = self.integral + e * dt;
                // Conditional integration: stop winding up while saturated.
                if g.ki == 0.0 || (g.ki * next).abs() <= 1.0 {
                    self.integral = next;
                }
                u
            }
            ControllerKind::Smc => smc_control(-e, -edot, g),
        }
    }
}

/// Yaw error feeds the rudder, depth error the stern plane; the propeller
/// follows the rpm setpoint.
#[derive(Clone, Debug)]
pub struct Tracker {
    kind: ControllerKind,
    cfg: TrackerConfig,
    yaw: Channel,
    depth: Channel,
}

impl Tracker {
    pub fn new(kind: ControllerKind, cfg: TrackerConfig) -> Self {
        Tracker { kind, cfg, yaw: Channel::default(), depth: Channel::default() }
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn reset(&mut self) {
        self.yaw = Channel::default();
        self.depth = Channel::default();
    }

    /// One control tick. Error rates are differences of the measurements
    /// (zero on the first tick), so reference steps cause no derivative kick.
    pub fn track_step(&mut self, sp: &Setpoint, s: &AuvState, dt: f64, vehicle: &VehicleParams) -> ActuatorCommand {
        let g = &self.cfg.gains;
        let e_yaw = self.cfg.yaw_scale * wrap_angle(sp.yaw - s.yaw);
        let yaw_move = self.yaw.prev.map_or(0.0, |p| wrap_angle(s.yaw - p));
        self.yaw.prev = Some(s.yaw);
        let edot_yaw = -self.cfg.yaw_scale * yaw_move / dt;

        let e_depth = self.cfg.depth_scale * (sp.depth - s.down);
        let depth_move = self.depth.prev.map_or(0.0, |p| s.down - p);
        self.depth.prev = Some(s.down);
        let edot_depth = -self.cfg.depth_scale * depth_move / dt;

        let rudder = self.yaw.command(self.kind, e_yaw, edot_yaw, g, dt);
        // Nose-down (negative stern) dives, so a positive depth error maps to a negative plane.
        let stern = -self.depth.command(self.kind, e_depth, edot_depth, g, dt);
        ActuatorCommand { rpm: sp.rpm.clamp(0.0, vehicle.max_rpm), rudder, stern }
    }
}

/// Number of strict sign changes in a command series (zeros are skipped).
pub fn sign_flips(series: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut flips = 0;
    for &v in series {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            flips += 1;
        }
        last = v;
    }
    flips
}
