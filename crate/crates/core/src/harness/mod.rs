//! Configuration, the training loop and the evaluation modes.

mod agent;
pub mod checkpoint;
mod config;
mod evaluate;
mod stages;
mod table;
mod track;
mod train;

pub use agent::{denoiser_layout, Agent, Decision, Mode, StepLosses};
pub use config::{DiffusionConfig, LearnerConfig, Profile, RunConfig, StagesConfig, TrackConfig, Variant, KEYS};
pub use evaluate::{eval_seed, evaluate, evaluate_checkpoint, rollout, EvalRow, MeanStd, EVAL_COLUMNS};
pub use stages::{dispersion, stages, stages_to, StageResult, StagesOutcome};
pub use table::{emit_csv, num, CsvOut};
pub use track::{track, track_to, TrackRow, TrackSummary, SUMMARY_COLUMNS, TRACK_COLUMNS};
pub use train::{episode_seed, train, EpisodeRow, SelectionAudit, TrainOutcome, EPISODE_COLUMNS};
