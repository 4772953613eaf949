//! Twin-critic learner, replay and value-guided selection.

mod nets;
mod replay;
mod td3;

pub use nets::{concat_rows, critic_q, ActionValue, Actor, CriticPair};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use td3::{
    actor_loss, argmax, critic_losses, select_action, select_plan, smoothing_noise, soft_update, td3_target, td3_targets,
    Selection, TargetValue, Td3, Td3Config, UpdateStats,
};
