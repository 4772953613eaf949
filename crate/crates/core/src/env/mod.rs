//! Underwater data-collection task.

mod task;
mod world;

pub use task::{EnvConfig, EnvStep, TaskEnv, ACTION_DIM};
pub use world::{comm_rate, distance, Metrics, RewardWeights, Seabed, SensorNode, StepReport, World, WorldConfig};
