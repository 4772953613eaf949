//! Reduced-order vehicle plant: decoupled surge, yaw and pitch/depth
//! channels with quadratic surge drag, integrated semi-implicitly.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::disturbance::Disturbance;
use crate::error::{Error, Result};

/// Pose and body-frame velocities. `down` is depth (positive below the
/// surface); pitch is positive nose-up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuvState {
    pub north: f64,
    pub east: f64,
    pub down: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub surge: f64,
    pub sway: f64,
    pub heave: f64,
    pub yaw_rate: f64,
}

impl AuvState {
    pub fn at(north: f64, east: f64, down: f64, yaw: f64) -> Self {
        AuvState { north, east, down, yaw: wrap_angle(yaw), ..Default::default() }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.north, self.east, self.down]
    }

    pub fn speed(&self) -> f64 {
        (self.surge * self.surge + self.sway * self.sway + self.heave * self.heave).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [
            self.north,
            self.east,
            self.down,
            self.yaw,
            self.pitch,
            self.surge,
            self.sway,
            self.heave,
            self.yaw_rate,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Rate of change of depth over ground, excluding currents.
    pub fn depth_rate(&self) -> f64 {
        -self.surge * self.pitch.sin() + self.heave * self.pitch.cos()
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Propeller speed and normalized fin deflections.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub rpm: f64,
    pub rudder: f64,
    pub stern: f64,
}

impl ActuatorCommand {
    pub fn neutral() -> Self {
        Self::default()
    }
}

/// Plant constants. Thrust is `thrust_coeff * rpm^2`, drag
/// `drag_coeff * u |u|`; `thrust_coeff` is derived so that terminal speed at
/// full rpm equals `max_speed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub mass: f64,
    pub added_mass: f64,
    pub water_density: f64,
    pub drag_cd: f64,
    pub frontal_area: f64,
    pub max_rpm: f64,
    pub max_speed: f64,
    pub max_yaw_rate: f64,
    pub yaw_time_constant: f64,
    pub max_pitch_rate: f64,
    pub max_pitch: f64,
    pub cross_time_constant: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            mass: 31.9,
            added_mass: 3.2,
            water_density: 1026.0,
            drag_cd: 0.2,
            frontal_area: 0.0284,
            max_rpm: 1525.0,
            max_speed: 2.3,
            max_yaw_rate: 0.26,
            yaw_time_constant: 0.5,
            max_pitch_rate: 0.2,
            max_pitch: 0.5,
            cross_time_constant: 1.0,
        }
    }
}

impl VehicleParams {
    pub fn drag_coeff(&self) -> f64 {
        0.5 * self.water_density * self.drag_cd * self.frontal_area
    }

    pub fn thrust_coeff(&self) -> f64 {
        self.drag_coeff() * self.max_speed * self.max_speed / (self.max_rpm * self.max_rpm)
    }

    pub fn surge_mass(&self) -> f64 {
        self.mass + self.added_mass
    }

    pub fn thrust(&self, rpm: f64) -> f64 {
        self.thrust_coeff() * rpm * rpm
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("water_density", self.water_density),
            ("drag_cd", self.drag_cd),
            ("frontal_area", self.frontal_area),
            ("max_rpm", self.max_rpm),
            ("max_speed", self.max_speed),
            ("max_yaw_rate", self.max_yaw_rate),
            ("yaw_time_constant", self.yaw_time_constant),
            ("max_pitch_rate", self.max_pitch_rate),
            ("max_pitch", self.max_pitch),
            ("cross_time_constant", self.cross_time_constant),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("must be positive, got {v}")));
            }
        }
        if self.added_mass < 0.0 {
            return Err(Error::config("added_mass", "must be non-negative"));
        }
        Ok(())
    }

    pub fn check_command(&self, cmd: &ActuatorCommand) -> Result<()> {
        if !(0.0..=self.max_rpm).contains(&cmd.rpm) {
            return Err(Error::usage(format!("rpm {} outside [0, {}]", cmd.rpm, self.max_rpm)));
        }
        for (name, v) in [("rudder", cmd.rudder), ("stern", cmd.stern)] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::usage(format!("{name} command {v} outside [-1, 1]")));
            }
        }
        Ok(())
    }
}

/// One semi-implicit Euler step: velocities first (drag and lags treated
/// implicitly), caps applied, then pose integrated with the new velocities
/// plus the water current.
pub fn step_dynamics(
    s: &AuvState,
    cmd: &ActuatorCommand,
    dist: &Disturbance,
    dt: f64,
    p: &VehicleParams,
) -> Result<AuvState> {
    p.check_command(cmd)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::usage(format!("time step must be positive, got {dt}")));
    }
    let m = p.surge_mass();
    let mut surge = (s.surge + dt * (p.thrust(cmd.rpm) / m + dist.wave_accel[0])) / (1.0 + dt * p.drag_coeff() * s.surge.abs() / m);
    let relax = 1.0 + dt / p.cross_time_constant;
    let mut sway = (s.sway + dt * dist.wave_accel[1]) / relax;
    let mut heave = (s.heave + dt * dist.wave_accel[2]) / relax;
    let tau = p.yaw_time_constant;
    let yaw_rate = ((s.yaw_rate + dt * (p.max_yaw_rate * cmd.rudder / tau + dist.wave_yaw_accel)) / (1.0 + dt / tau))
        .clamp(-p.max_yaw_rate, p.max_yaw_rate);
    let pitch = (s.pitch + dt * p.max_pitch_rate * cmd.stern).clamp(-p.max_pitch, p.max_pitch);

    let speed = (surge * surge + sway * sway + heave * heave).sqrt();
    if speed > p.max_speed {
        let k = p.max_speed / speed;
        surge *= k;
        sway *= k;
        heave *= k;
    }

    let yaw = wrap_angle(s.yaw + dt * yaw_rate);
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let forward = surge * cp + heave * sp;
    let north = s.north + dt * (forward * cy - sway * sy + dist.current[0]);
    let east = s.east + dt * (forward * sy + sway * cy + dist.current[1]);
    let down = (s.down + dt * (-surge * sp + heave * cp + dist.current[2])).max(0.0);
    Ok(AuvState { north, east, down, yaw, pitch, surge, sway, heave, yaw_rate })
}
