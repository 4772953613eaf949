//! Conditional denoising generator for action plans.

mod denoiser;
mod embedding;
mod encoding;
mod sampler;
mod schedule;

pub use denoiser::{
    diffusion_loss, loss_on, noise_batch, Denoiser, DenoiserCache, DenoiserLayout, DiffusionSample, NoisedBatch,
    StateContext,
};
pub use embedding::{time_embed, TIME_BASE};
pub use encoding::{encode_state, encoded_width, EncodedState, History};
pub use sampler::{clamp_unit, reverse_snapshots, sample_candidates, CandidateSet, NoisePredictor, ZeroPredictor};
pub use schedule::{forward_diffuse, NoiseSchedule, ReverseChain};
