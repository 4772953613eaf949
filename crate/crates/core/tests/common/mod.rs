#![allow(dead_code)]

use std::path::Path;

use auvdiff::harness::RunConfig;

/// A run small enough to train in well under a second.
pub fn tiny(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::parse(
        "episodes = 2
episode_steps = 10
warmup_steps = 4
batch = 4
history = 2
state_features = 8
time_embed_width = 8
time_features = 8
denoiser_hidden = 8
denoiser_layers = 1
net_width = 8
net_depth = 1
sample_steps = 4
candidates = 3
horizon = 2
checkpoint_every = 1
eval_episodes = 2
bounds_north = 60
bounds_east = 60
bounds_down = 30
seabed_mean = 25
seabed_amplitude = 2
stage_horizon = 5
stages = 1,2
",
    )
    .unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Every file under `dir`, relative path and contents, sorted by path.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), read(&p)));
            }
        }
    }
    out.sort();
    out
}
