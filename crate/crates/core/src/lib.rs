//! Diffusion-augmented TD3 control for a simulated underwater vehicle.
//!
//! A conditional denoiser proposes candidate action plans, twin critics pick
//! the best one, and a low-level S-Surface (or PID / SMC) controller turns
//! the chosen heading/depth/speed setpoints into actuator commands for a
//! reduced-order vehicle model flying through a sensor-node data-collection
//! world.

pub mod diffusion;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod rl;
pub mod rng;

pub use error::{Error, Result};
