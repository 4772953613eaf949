use std::path::PathBuf;
use std::process::ExitCode;

use auvdiff::dynamics::{ControllerKind, SeaCondition};
use auvdiff::error::Result;
use auvdiff::harness::{self, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "auvdiff", version, about = "Diffusion-augmented TD3 for a simulated AUV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; defaults are used for missing keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// ssurface|pid|smc
    #[arg(long)]
    controller: Option<String>,
    /// ideal|es|ves
    #[arg(long)]
    sea: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the joint training loop.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint across sea conditions and controllers.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Defaults to `<out>/checkpoints/final`.
        #[arg(long, value_name = "DIR")]
        checkpoint: Option<PathBuf>,
        /// Defaults to the config's `eval_episodes`.
        #[arg(long, value_name = "N")]
        episodes: Option<usize>,
    },
    /// Closed-loop tracking of the configured yaw/depth profile.
    Track {
        #[command(flatten)]
        common: Common,
    },
    /// Fly candidates taken from intermediate denoising stages.
    Stages {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        checkpoint: Option<PathBuf>,
    },
}

struct Resolved {
    cfg: RunConfig,
    controllers: Vec<ControllerKind>,
    seas: Vec<SeaCondition>,
}

fn resolve(common: &Common) -> Result<Resolved> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    let controllers = match &common.controller {
        Some(c) => {
            cfg.set("controller", c)?;
            vec![cfg.env.controller]
        }
        None => ControllerKind::ALL.to_vec(),
    };
    let seas = match &common.sea {
        Some(s) => {
            cfg.set("sea", s)?;
            vec![cfg.env.sea]
        }
        None => SeaCondition::ALL.to_vec(),
    };
    cfg.validate()?;
    Ok(Resolved { cfg, controllers, seas })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common } => {
            let r = resolve(&common)?;
            let outcome = harness::train(&r.cfg)?;
            if let Some(last) = outcome.rows.last() {
                println!(
                    "trained {} episodes; last reward {:.3}, sdr {:.3}; output in {}",
                    outcome.rows.len(),
                    last.reward,
                    last.metrics.sdr,
                    r.cfg.out.display()
                );
            }
        }
        Command::Eval { common, checkpoint, episodes } => {
            let r = resolve(&common)?;
            let dir = checkpoint.unwrap_or_else(|| r.cfg.out.join("checkpoints").join("final"));
            let n = episodes.unwrap_or(r.cfg.eval_episodes);
            let rows = harness::evaluate_checkpoint(&r.cfg, &dir, &r.cfg.out, n, &r.seas, &r.controllers)?;
            for row in rows {
                println!(
                    "{} {}: reward {:.3} ± {:.3}, sdr {:.3} ± {:.3}",
                    row.sea, row.controller, row.reward.mean, row.reward.std, row.sdr.mean, row.sdr.std
                );
            }
        }
        Command::Track { common } => {
            let r = resolve(&common)?;
            for s in harness::track_to(&r.cfg, &r.controllers, r.cfg.seed, &r.cfg.out)? {
                println!(
                    "{}: yaw mse {:.5}, depth mse {:.5}, flips {}",
                    s.controller,
                    s.yaw_mse,
                    s.depth_mse,
                    s.flips()
                );
            }
        }
        Command::Stages { common, checkpoint } => {
            let r = resolve(&common)?;
            let dir = checkpoint.unwrap_or_else(|| r.cfg.out.join("checkpoints").join("final"));
            let (_, agent) = harness::checkpoint::load(&dir, &r.cfg)?;
            let res = harness::stages_to(&r.cfg, &agent, r.cfg.seed, &r.cfg.out)?;
            for st in &res.stages {
                println!("stage {}: dispersion {:.3}", st.stage, st.dispersion);
            }
            println!("selected candidate {}", res.selected);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("auvdiff: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
