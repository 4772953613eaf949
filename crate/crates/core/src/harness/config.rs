//! Run configuration: a flat `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; omitted keys keep their defaults. Unknown or repeated keys,
//! malformed values and out-of-range values are configuration errors naming
//! the key. [`RunConfig::emit`] writes every key, and parsing its output
//! reproduces the configuration exactly.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::{ControllerKind, SeaCondition};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::rl::Td3Config;

/// Which behavior policy a run trains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Diffusion candidates scored by the twin critics.
    Diffusion,
    /// The TD3 actor plus Gaussian exploration; no diffusion.
    Vanilla,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Diffusion => "diffusion",
            Variant::Vanilla => "vanilla",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diffusion" => Ok(Variant::Diffusion),
            "vanilla" => Ok(Variant::Vanilla),
            other => Err(Error::config("variant", format!("unknown variant `{other}` (diffusion|vanilla)"))),
        }
    }
}

/// Piecewise-constant setpoint schedule: `time:value` pairs, times in
/// seconds starting at 0 and strictly increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile(pub Vec<(f64, f64)>);

impl Profile {
    pub fn value_at(&self, t: f64) -> f64 {
        let mut v = self.0[0].1;
        for &(start, value) in &self.0 {
            if t >= start {
                v = value;
            }
        }
        v
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(t, v)| format!("{t}:{v}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',') {
            let (t, v) = part.split_once(':').ok_or_else(|| format!("expected time:value, got `{part}`"))?;
            let t: f64 = t.trim().parse().map_err(|_| format!("bad time `{t}`"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("bad value `{v}`"))?;
            if !t.is_finite() || !v.is_finite() {
                return Err("profile entries must be finite".into());
            }
            if let Some(&(prev, _)) = out.last() {
                if t <= prev {
                    return Err("profile times must increase".into());
                }
            } else if t != 0.0 {
                return Err("profile must start at time 0".into());
            }
            out.push((t, v));
        }
        Ok(Profile(out))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Reverse-chain length used for sampling.
    pub sample_steps: usize,
    pub candidates: usize,
    pub horizon: usize,
    pub history: usize,
    pub state_features: usize,
    pub time_embed_width: usize,
    pub time_features: usize,
    pub hidden: usize,
    pub layers: usize,
    pub clip_x0: bool,
    pub lr: f64,
    /// Stop diffusion updates once learning starts.
    pub freeze_after_warmup: bool,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            steps: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
            sample_steps: 50,
            candidates: 5,
            horizon: 4,
            history: 10,
            state_features: 128,
            time_embed_width: 32,
            time_features: 128,
            hidden: 128,
            layers: 2,
            clip_x0: true,
            lr: 1e-4,
            freeze_after_warmup: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub td3: Td3Config,
    pub width: usize,
    pub depth: usize,
    pub batch: usize,
    pub buffer_capacity: usize,
    pub warmup_steps: usize,
    pub updates_per_step: usize,
    /// Exploration noise of the vanilla behavior policy.
    pub explore_noise: f64,
    /// Multiplier applied to environment rewards before storage.
    pub reward_scale: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            td3: Td3Config::default(),
            width: 128,
            depth: 2,
            batch: 256,
            buffer_capacity: 100_000,
            warmup_steps: 1000,
            updates_per_step: 1,
            explore_noise: 0.1,
            reward_scale: 0.01,
        }
    }
}

impl LearnerConfig {
    pub fn hidden(&self) -> Vec<usize> {
        vec![self.width; self.depth]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    pub duration: f64,
    pub yaw: Profile,
    pub depth: Profile,
    pub rpm: f64,
    pub start_depth: f64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            duration: 120.0,
            yaw: Profile(vec![(0.0, 0.0), (20.0, 0.5), (50.0, -0.3), (80.0, 0.2)]),
            depth: Profile(vec![(0.0, 10.0), (30.0, 14.0), (70.0, 8.0)]),
            rpm: 1000.0,
            start_depth: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagesConfig {
    /// Denoising stages, counted in reverse steps taken.
    pub stages: Vec<usize>,
    /// Decisions each candidate is flown open-loop.
    pub horizon: usize,
}

impl Default for StagesConfig {
    fn default() -> Self {
        StagesConfig { stages: vec![1, 25, 50], horizon: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub episodes: usize,
    pub variant: Variant,
    pub out: PathBuf,
    /// Checkpoint cadence in episodes; 0 keeps only the final checkpoint.
    pub checkpoint_every: usize,
    pub log_decisions: bool,
    pub eval_episodes: usize,
    pub diffusion: DiffusionConfig,
    pub learner: LearnerConfig,
    pub env: EnvConfig,
    pub track: TrackConfig,
    pub stages: StagesConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            episodes: 150,
            variant: Variant::Diffusion,
            out: PathBuf::from("runs/default"),
            checkpoint_every: 50,
            log_decisions: true,
            eval_episodes: 10,
            diffusion: DiffusionConfig::default(),
            learner: LearnerConfig::default(),
            env: EnvConfig::default(),
            track: TrackConfig::default(),
            stages: StagesConfig::default(),
        }
    }
}

/// Textual form of a single config value.
trait Value: Sized {
    fn parse_value(s: &str) -> std::result::Result<Self, String>;
    fn emit_value(&self) -> String;
}

macro_rules! via_from_str {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                s.parse::<$t>().map_err(|e| e.to_string())
            }
            fn emit_value(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

via_from_str!(usize, u64, bool, f64, Profile);

macro_rules! via_domain_str {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                s.parse::<$t>().map_err(|e| match e {
                    Error::Config { message, .. } => message,
                    other => other.to_string(),
                })
            }
            fn emit_value(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

via_domain_str!(SeaCondition, ControllerKind, Variant);

impl Value for PathBuf {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        if s.is_empty() {
            return Err("path must not be empty".into());
        }
        Ok(PathBuf::from(s))
    }

    fn emit_value(&self) -> String {
        self.display().to_string()
    }
}

impl Value for Vec<usize> {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}"))).collect()
    }

    fn emit_value(&self) -> String {
        self.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    }
}

macro_rules! config_keys {
    ($($key:literal => ($($field:tt)+);)*) => {
        /// Every accepted key, in emission order.
        pub const KEYS: &[&str] = &[$($key),*];

        fn set_key(cfg: &mut RunConfig, key: &str, raw: &str) -> Result<()> {
            match key {
                $($key => {
                    cfg.$($field)+ = Value::parse_value(raw).map_err(|m| Error::config($key, m))?;
                })*
                _ => return Err(Error::config(key, "unknown configuration key")),
            }
            Ok(())
        }

        fn emit_keys(cfg: &RunConfig) -> Vec<(&'static str, String)> {
            vec![$(($key, cfg.$($field)+.emit_value())),*]
        }
    };
}

config_keys! {
    "seed" => (seed);
    "episodes" => (episodes);
    "variant" => (variant);
    "out" => (out);
    "checkpoint_every" => (checkpoint_every);
    "log_decisions" => (log_decisions);
    "eval_episodes" => (eval_episodes);
    "diffusion_steps" => (diffusion.steps);
    "beta_start" => (diffusion.beta_start);
    "beta_end" => (diffusion.beta_end);
    "sample_steps" => (diffusion.sample_steps);
    "candidates" => (diffusion.candidates);
    "horizon" => (diffusion.horizon);
    "history" => (diffusion.history);
    "state_features" => (diffusion.state_features);
    "time_embed_width" => (diffusion.time_embed_width);
    "time_features" => (diffusion.time_features);
    "denoiser_hidden" => (diffusion.hidden);
    "denoiser_layers" => (diffusion.layers);
    "clip_x0" => (diffusion.clip_x0);
    "diffusion_lr" => (diffusion.lr);
    "freeze_diffusion" => (diffusion.freeze_after_warmup);
    "gamma" => (learner.td3.gamma);
    "tau" => (learner.td3.tau);
    "policy_noise" => (learner.td3.policy_noise);
    "noise_clip" => (learner.td3.noise_clip);
    "policy_delay" => (learner.td3.policy_delay);
    "critic_lr" => (learner.td3.critic_lr);
    "actor_lr" => (learner.td3.actor_lr);
    "net_width" => (learner.width);
    "net_depth" => (learner.depth);
    "batch" => (learner.batch);
    "buffer_capacity" => (learner.buffer_capacity);
    "warmup_steps" => (learner.warmup_steps);
    "updates_per_step" => (learner.updates_per_step);
    "explore_noise" => (learner.explore_noise);
    "reward_scale" => (learner.reward_scale);
    "sea" => (env.sea);
    "controller" => (env.controller);
    "dt" => (env.dt);
    "action_repeat" => (env.action_repeat);
    "yaw_step" => (env.yaw_step);
    "depth_step" => (env.depth_step);
    "nearest_nodes" => (env.nearest);
    "obs_range" => (env.obs_range);
    "bounds_north" => (env.world.bounds[0]);
    "bounds_east" => (env.world.bounds[1]);
    "bounds_down" => (env.world.bounds[2]);
    "node_count" => (env.world.node_count);
    "auv_count" => (env.world.auv_count);
    "episode_steps" => (env.world.episode_steps);
    "node_buffer" => (env.world.node_buffer);
    "service_radius" => (env.world.service_radius);
    "max_rate" => (env.world.max_rate);
    "power_coeff" => (env.world.power_coeff);
    "safety_margin" => (env.world.safety_margin);
    "seabed_mean" => (env.world.seabed_mean);
    "seabed_amplitude" => (env.world.seabed_amplitude);
    "node_spacing" => (env.world.node_spacing);
    "node_clearance" => (env.world.node_clearance);
    "node_min_depth" => (env.world.node_min_depth);
    "start_depth" => (env.world.start_depth);
    "w_rate" => (env.weights.rate);
    "w_serve" => (env.weights.serve);
    "w_energy" => (env.weights.energy);
    "w_collision" => (env.weights.collision);
    "mass" => (env.vehicle.mass);
    "added_mass" => (env.vehicle.added_mass);
    "water_density" => (env.vehicle.water_density);
    "drag_cd" => (env.vehicle.drag_cd);
    "frontal_area" => (env.vehicle.frontal_area);
    "max_rpm" => (env.vehicle.max_rpm);
    "max_speed" => (env.vehicle.max_speed);
    "max_yaw_rate" => (env.vehicle.max_yaw_rate);
    "yaw_time_constant" => (env.vehicle.yaw_time_constant);
    "max_pitch_rate" => (env.vehicle.max_pitch_rate);
    "max_pitch" => (env.vehicle.max_pitch);
    "cross_time_constant" => (env.vehicle.cross_time_constant);
    "zeta1" => (env.tracker.gains.zeta1);
    "zeta2" => (env.tracker.gains.zeta2);
    "delta_gain" => (env.tracker.gains.delta_gain);
    "delta_window" => (env.tracker.gains.delta_window);
    "pid_kp" => (env.tracker.gains.kp);
    "pid_ki" => (env.tracker.gains.ki);
    "pid_kd" => (env.tracker.gains.kd);
    "smc_lambda" => (env.tracker.gains.lambda);
    "smc_eta" => (env.tracker.gains.eta);
    "smc_phi" => (env.tracker.gains.phi);
    "yaw_error_scale" => (env.tracker.yaw_scale);
    "depth_error_scale" => (env.tracker.depth_scale);
    "es_current" => (env.es_caps.current);
    "es_wave_amp" => (env.es_caps.wave_amp);
    "es_wave_period" => (env.es_caps.wave_period);
    "es_yaw_coupling" => (env.es_caps.yaw_coupling);
    "ves_current" => (env.ves_caps.current);
    "ves_wave_amp" => (env.ves_caps.wave_amp);
    "ves_wave_period" => (env.ves_caps.wave_period);
    "ves_yaw_coupling" => (env.ves_caps.yaw_coupling);
    "track_duration" => (track.duration);
    "track_yaw" => (track.yaw);
    "track_depth" => (track.depth);
    "track_rpm" => (track.rpm);
    "track_start_depth" => (track.start_depth);
    "stages" => (stages.stages);
    "stage_horizon" => (stages.horizon);
}

impl RunConfig {
    /// Parses configuration text on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "key given more than once"));
            }
            set_key(&mut cfg, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies one override, then re-validates.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        set_key(self, key, value)?;
        self.validate()
    }

    pub fn emit(&self) -> String {
        let mut s = String::new();
        for (k, v) in emit_keys(self) {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.diffusion;
        if d.steps < 2 {
            return Err(Error::config("diffusion_steps", "must be at least 2"));
        }
        if !(d.beta_start > 0.0 && d.beta_start < d.beta_end && d.beta_end < 1.0) {
            return Err(Error::config("beta_start", "need 0 < beta_start < beta_end < 1"));
        }
        if d.sample_steps == 0 || d.sample_steps > d.steps {
            return Err(Error::config("sample_steps", format!("must lie in 1..={}", d.steps)));
        }
        for (k, v) in [
            ("candidates", d.candidates),
            ("horizon", d.horizon),
            ("state_features", d.state_features),
            ("time_features", d.time_features),
            ("denoiser_hidden", d.hidden),
            ("denoiser_layers", d.layers),
        ] {
            if v == 0 {
                return Err(Error::config(k, "must be at least 1"));
            }
        }
        if d.time_embed_width == 0 || d.time_embed_width % 2 != 0 {
            return Err(Error::config("time_embed_width", "must be a positive even number"));
        }
        if !(d.lr > 0.0 && d.lr.is_finite()) {
            return Err(Error::config("diffusion_lr", "must be positive"));
        }
        let l = &self.learner;
        l.td3.validate()?;
        for (k, v) in [("net_width", l.width), ("net_depth", l.depth), ("batch", l.batch), ("updates_per_step", l.updates_per_step)] {
            if v == 0 {
                return Err(Error::config(k, "must be at least 1"));
            }
        }
        if l.buffer_capacity == 0 {
            return Err(Error::config("buffer_capacity", "must be at least 1"));
        }
        if !(l.explore_noise >= 0.0 && l.explore_noise.is_finite()) {
            return Err(Error::config("explore_noise", "must be non-negative"));
        }
        if !(l.reward_scale > 0.0 && l.reward_scale.is_finite()) {
            return Err(Error::config("reward_scale", "must be positive"));
        }
        if self.episodes == 0 {
            return Err(Error::config("episodes", "must be at least 1"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes", "must be at least 1"));
        }
        self.env.validate()?;
        let t = &self.track;
        if !(t.duration > 0.0 && t.duration.is_finite()) {
            return Err(Error::config("track_duration", "must be positive"));
        }
        if t.yaw.0.is_empty() || t.depth.0.is_empty() {
            return Err(Error::config("track_yaw", "profiles must not be empty"));
        }
        if !(0.0..=self.env.vehicle.max_rpm).contains(&t.rpm) {
            return Err(Error::config("track_rpm", "must lie in [0, max_rpm]"));
        }
        if !(t.start_depth >= 0.0 && t.start_depth.is_finite()) {
            return Err(Error::config("track_start_depth", "must be non-negative"));
        }
        let s = &self.stages;
        if s.stages.is_empty() || s.stages.iter().any(|&x| x == 0) {
            return Err(Error::config("stages", "need at least one stage, each >= 1"));
        }
        if s.horizon == 0 {
            return Err(Error::config("stage_horizon", "must be at least 1"));
        }
        Ok(())
    }
}
