//! Vehicle plant, sea disturbances and low-level controllers.

mod control;
mod disturbance;
mod vehicle;

pub use control::{
    estimate_delta_u, pid_control, s_surface, sign_flips, smc_control, ControllerGains, ControllerKind, Setpoint, Tracker,
    TrackerConfig, DELTA_U_CAP,
};
pub use disturbance::{norm3, Disturbance, DisturbanceModel, SeaCaps, SeaCondition};
pub use vehicle::{step_dynamics, wrap_angle, ActuatorCommand, AuvState, VehicleParams};
