//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Criteria 4, 8 and 10 share one set of toy-world training runs
//! (`configs/toy.cfg`, seeds 0..5, both variants).

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use auvdiff::diffusion::{loss_on, noise_batch, DiffusionSample, EncodedState, NoiseSchedule};
use auvdiff::dynamics::{
    s_surface, step_dynamics, ActuatorCommand, AuvState, ControllerGains, ControllerKind, Disturbance, DisturbanceModel,
    SeaCaps, SeaCondition, VehicleParams,
};
use auvdiff::env::{EnvConfig, TaskEnv, ACTION_DIM};
use auvdiff::harness::{checkpoint, stages, track, train, Agent, RunConfig, Variant};
use auvdiff::nn::{Parameterized, ParamSet, Tensor};
use auvdiff::rl::{actor_loss, critic_losses, td3_target, Batch, Transition};
use auvdiff::rng;
use rand::Rng as _;

const TOY: &str = include_str!("../../../configs/toy.cfg");
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
/// Episodes averaged for the final-window reward.
const FINAL_WINDOW: usize = 20;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || format!("{what} took {:.1}s, limit {limit}s", elapsed.as_secs_f64()))
}

// 1 -------------------------------------------------------------------------

fn schedule_math() -> Outcome {
    let start = Instant::now();
    let (t, lo, hi) = (1000usize, 1e-4, 0.02);
    let s = NoiseSchedule::linear(t, lo, hi).map_err(|e| e.to_string())?;
    ensure(s.betas()[0] == lo && s.betas()[t - 1] == hi, || format!("endpoints {} {}", s.betas()[0], s.betas()[t - 1]))?;
    let mut worst = 0.0f64;
    let mut prod = 1.0;
    for k in 0..t {
        let beta = lo + (hi - lo) * k as f64 / (t - 1) as f64;
        worst = worst.max((s.betas()[k] - beta).abs());
        prod *= 1.0 - beta;
        worst = worst.max((s.alpha_bars()[k] - prod).abs());
        if k > 0 && !(s.alpha_bars()[k] < s.alpha_bars()[k - 1]) {
            return Err(format!("alpha_bar not strictly decreasing at {k}"));
        }
    }
    ensure(worst <= 1e-12, || format!("product identity error {worst:e}"))?;
    within(start.elapsed(), 1.0, "schedule")?;
    Ok(format!("max identity error {worst:.1e}"))
}

// 2 -------------------------------------------------------------------------

fn forward_marginal() -> Outcome {
    let start = Instant::now();
    let s = NoiseSchedule::linear(1000, 1e-4, 0.02).map_err(|e| e.to_string())?;
    let (n, x0) = (100_000usize, 0.8);
    let mut worst = 0.0f64;
    let mut report = String::new();
    for &t in &[1usize, 50, 300, 1000] {
        let mut r = rng::seeded(77, t as u64);
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let mut x = x0;
            for k in 0..t {
                let b = s.betas()[k];
                x = (1.0 - b).sqrt() * x + b.sqrt() * rng::gaussian(&mut r);
            }
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        let ab = s.alpha_bar(t);
        let (m_ref, v_ref) = (ab.sqrt() * x0, 1.0 - ab);
        let rel = (var - v_ref).abs() / v_ref;
        let mean_tol = 4.0 * (v_ref / n as f64).sqrt();
        ensure((mean - m_ref).abs() <= mean_tol, || format!("t={t}: mean {mean} vs {m_ref}"))?;
        worst = worst.max(rel);
        report.push_str(&format!("t={t}:{:.2}% ", 100.0 * rel));
    }
    ensure(worst <= 0.02, || format!("variance error {report}"))?;
    within(start.elapsed(), 10.0, "marginal check")?;
    Ok(format!("variance error {}", report.trim_end()))
}

// 3 -------------------------------------------------------------------------

/// Central-difference check of `analytic` on an evenly strided subset of up
/// to `per_tensor` coordinates of every parameter tensor.
fn sampled_fd<M: Parameterized + Clone>(model: &M, analytic: &[ParamSet], loss: impl Fn(&M) -> f64, per_tensor: usize) -> f64 {
    let eps = 1e-5;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for s in 0..analytic.len() {
        for e in 0..analytic[s].entries.len() {
            let len = analytic[s].entries[e].tensor.len();
            let stride = (len / per_tensor).max(1);
            for k in (0..len).step_by(stride) {
                let orig = probe.param_sets()[s].entries[e].tensor.values()[k];
                probe.param_sets_mut()[s].entries[e].tensor.values_mut()[k] = orig + eps;
                let up = loss(&probe);
                probe.param_sets_mut()[s].entries[e].tensor.values_mut()[k] = orig - eps;
                let down = loss(&probe);
                probe.param_sets_mut()[s].entries[e].tensor.values_mut()[k] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let a = analytic[s].entries[e].tensor.values()[k];
                worst = worst.max((a - numeric).abs() / numeric.abs().max(1.0));
            }
        }
    }
    worst
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let cfg = RunConfig::default();
    let obs_dim = cfg.env.obs_dim();
    let agent = Agent::new(&cfg, obs_dim).map_err(|e| e.to_string())?;
    let sd = agent.state_dim();
    let mut r = rng::seeded(3, 0);
    let state = |r: &mut rng::Rng| EncodedState((0..sd).map(|_| r.gen_range(-1.0..1.0)).collect());
    let plan_dim = cfg.diffusion.horizon * ACTION_DIM;

    let sched = NoiseSchedule::linear(cfg.diffusion.steps, cfg.diffusion.beta_start, cfg.diffusion.beta_end).unwrap();
    let samples: Vec<DiffusionSample> = (0..2)
        .map(|_| DiffusionSample { plan: (0..plan_dim).map(|_| r.gen_range(-1.0..1.0)).collect(), state: state(&mut r) })
        .collect();
    let nb = noise_batch(&samples, &sched, &mut r).unwrap();
    let (_, g) = loss_on(&agent.denoiser, &nb).unwrap();
    let e_den = sampled_fd(&agent.denoiser, &g, |m| loss_on(m, &nb).unwrap().0, 150);

    let trans: Vec<Transition> = (0..3)
        .map(|_| Transition {
            state: state(&mut r),
            action: (0..ACTION_DIM).map(|_| r.gen_range(-1.0..1.0)).collect(),
            reward: r.gen_range(-1.0..1.0),
            next_state: state(&mut r),
            done: false,
            plan: vec![0.0; plan_dim],
        })
        .collect();
    let refs: Vec<&Transition> = trans.iter().collect();
    let batch = Batch::from_transitions(&refs).unwrap();
    let y: Vec<f64> = (0..3).map(|i| 0.3 * i as f64 - 0.2).collect();
    let critics = agent.learner.critics.clone();
    let (_, _, g) = critic_losses(&critics, &batch, &y).unwrap();
    let e_crit = sampled_fd(
        &critics,
        &g,
        |m| {
            let (a, b, _) = critic_losses(m, &batch, &y).unwrap();
            a + b
        },
        150,
    );

    let actor = agent.learner.actor.clone();
    let q = critics.q1.clone();
    let (_, g) = actor_loss(&actor, &q, &batch.states).unwrap();
    let e_act = sampled_fd(&actor, &[g], |m| actor_loss(m, &q, &batch.states).unwrap().0, 150);

    let worst = e_den.max(e_crit).max(e_act);
    ensure(worst <= 1e-4, || format!("denoiser {e_den:.1e}, critics {e_crit:.1e}, actor {e_act:.1e}"))?;
    within(start.elapsed(), 30.0, "gradient suite")?;
    Ok(format!("denoiser {e_den:.1e}, critics {e_crit:.1e}, actor {e_act:.1e} (state width {sd})"))
}

// 5 -------------------------------------------------------------------------

fn td3_target_properties() -> Outcome {
    let cfg = RunConfig::default();
    let agent = Agent::new(&cfg, cfg.env.obs_dim()).map_err(|e| e.to_string())?;
    let (critics, actor) = (&agent.learner.target_critics, &agent.learner.target_actor);
    let sd = agent.state_dim();
    let mut r = rng::seeded(5, 0);
    let mut noise_rng = rng::seeded(5, 1);
    let (sigma, c) = (0.2, 0.5);
    let mut max_noise = 0.0f64;
    let mut draws = 0usize;
    for i in 0..400 {
        let s = EncodedState((0..sd).map(|_| r.gen_range(-2.0..2.0)).collect());
        let reward = r.gen_range(-5.0..5.0);
        let done = i % 7 == 0;
        let zero = td3_target(reward, &s, done, critics, actor, 0.0, sigma, c, &mut noise_rng).map_err(|e| e.to_string())?;
        ensure(zero.y == reward, || format!("gamma=0 gave {} for r={reward}", zero.y))?;
        let gamma = 0.99;
        let tv = td3_target(reward, &s, done, critics, actor, gamma, sigma, c, &mut noise_rng).map_err(|e| e.to_string())?;
        // Recompute the twin values from the networks with the reported noise.
        let a: Vec<f64> = actor.act(&s).unwrap().iter().zip(&tv.noise).map(|(a, n)| (a + n).clamp(-1.0, 1.0)).collect();
        let input = Tensor::row(s.0.iter().chain(a.iter()).copied().collect());
        let q1 = critics.q1.forward(&input).unwrap().values()[0];
        let q2 = critics.q2.forward(&input).unwrap().values()[0];
        let mask = if done { 0.0 } else { 1.0 };
        let y_ref = reward + mask * gamma * q1.min(q2);
        ensure((tv.y - y_ref).abs() <= 1e-12, || format!("target {} vs oracle {y_ref}", tv.y))?;
        for q in [q1, q2] {
            ensure(tv.y <= reward + mask * gamma * q + 1e-12, || "min-of-twins above a single-critic target".into())?;
        }
        for n in tv.noise.iter().chain(&zero.noise) {
            max_noise = max_noise.max(n.abs());
            draws += 1;
        }
    }
    while draws < 100_000 {
        let s = EncodedState((0..sd).map(|_| r.gen_range(-2.0..2.0)).collect());
        let tv = td3_target(0.0, &s, false, critics, actor, 0.99, sigma, c, &mut noise_rng).map_err(|e| e.to_string())?;
        for n in &tv.noise {
            max_noise = max_noise.max(n.abs());
            draws += 1;
        }
    }
    ensure(max_noise <= c, || format!("noise {max_noise} above clip {c}"))?;
    Ok(format!("{draws} noise draws, max |noise| {max_noise:.4}"))
}

// 6 -------------------------------------------------------------------------

fn s_surface_law() -> Outcome {
    let g = ControllerGains::default();
    ensure(g.zeta1 == 2.0 && g.zeta2 == 2.0, || "default zeta is not (2, 2)".into())?;
    let direct = 2.0 / (1.0 + (-(2.0 * 0.5 + 2.0 * -0.1f64)).exp()) - 1.0;
    let u = s_surface(0.5, -0.1, &g, 0.0);
    ensure((u - direct).abs() <= 1e-12, || format!("{u} vs {direct}"))?;
    let grid: Vec<f64> = (0..100).map(|i| -5.0 + 10.0 * i as f64 / 99.0).collect();
    for &e in &grid {
        for &ed in &grid {
            let v = s_surface(e, ed, &g, 0.0);
            ensure(s_surface(-e, -ed, &g, 0.0) == -v, || format!("odd symmetry fails at ({e}, {ed})"))?;
            ensure(v > -1.0 && v < 1.0, || format!("{v} outside (-1, 1) at ({e}, {ed})"))?;
        }
    }
    Ok(format!("u(0.5,-0.1) = {u:.6}, 10^4 grid points"))
}

// 7 -------------------------------------------------------------------------

fn dynamics_caps() -> Outcome {
    let p = VehicleParams::default();
    let mut r = rng::seeded(7, 0);
    let mut sea = DisturbanceModel::new(SeaCondition::Ves, SeaCaps::VES, 7);
    let mut s = AuvState::at(0.0, 0.0, 15.0, 0.0);
    let (mut top_speed, mut top_rate) = (0.0f64, 0.0f64);
    for k in 0..100_000 {
        let cmd = ActuatorCommand {
            rpm: r.gen_range(0.0..=p.max_rpm),
            rudder: r.gen_range(-1.0..=1.0),
            stern: r.gen_range(-1.0..=1.0),
        };
        let d = if k % 2 == 0 {
            sea.sample(k as f64 * 0.05)
        } else {
            Disturbance {
                current: [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-0.5..0.5)],
                wave_accel: [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)],
                wave_yaw_accel: r.gen_range(-0.5..0.5),
                seed: 0,
            }
        };
        s = step_dynamics(&s, &cmd, &d, 0.05, &p).map_err(|e| e.to_string())?;
        top_speed = top_speed.max(s.speed());
        top_rate = top_rate.max(s.yaw_rate.abs());
        if k % 5000 == 0 {
            s.down = r.gen_range(1.0..30.0);
        }
    }
    ensure(top_speed <= 2.3 + 1e-12, || format!("speed {top_speed}"))?;
    ensure(top_rate <= 0.26, || format!("yaw rate {top_rate}"))?;
    Ok(format!("max speed {top_speed:.4} m/s, max |yaw rate| {top_rate:.4} rad/s"))
}

// 9 -------------------------------------------------------------------------

fn controller_ordering() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for sea in [SeaCondition::Es, SeaCondition::Ves] {
        let mut cfg = RunConfig::default();
        cfg.env.sea = sea;
        let mut wins = 0;
        let mut chatter = true;
        let mut detail = Vec::new();
        for &seed in &SEEDS {
            let (_, ss) = track(&cfg, ControllerKind::SSurface, seed).map_err(|e| e.to_string())?;
            let (_, smc) = track(&cfg, ControllerKind::Smc, seed).map_err(|e| e.to_string())?;
            let (a, b) = (ss.yaw_mse + ss.depth_mse, smc.yaw_mse + smc.depth_mse);
            if a < b {
                wins += 1;
            }
            chatter &= smc.flips() > ss.flips();
            detail.push(format!("{a:.3}/{b:.3}"));
        }
        ok &= wins >= 4 && chatter;
        lines.push(format!("{sea}: S-Surface lower MSE in {wins}/5 [{}], SMC chatters more: {chatter}", detail.join(" ")));
    }
    within(start.elapsed(), 600.0, "tracking")?;
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// 11 ------------------------------------------------------------------------

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            let name = p.strip_prefix(dir).unwrap().display().to_string();
            if p.is_dir() {
                stack.push(p);
            } else if name != "timing.csv" && name != "config.txt" {
                out.push((name, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism(root: &Path) -> Outcome {
    let mut names = 0;
    for variant in [Variant::Diffusion, Variant::Vanilla] {
        let mut cfg = RunConfig::parse(TOY).map_err(|e| e.to_string())?;
        cfg.variant = variant;
        cfg.episodes = 8;
        cfg.learner.warmup_steps = 200;
        cfg.checkpoint_every = 4;
        cfg.log_decisions = true;
        let mut runs = Vec::new();
        for k in 0..2 {
            cfg.out = root.join(format!("det_{variant}_{k}"));
            train(&cfg).map_err(|e| e.to_string())?;
            runs.push(artifacts(&cfg.out));
        }
        ensure(runs[0].len() >= 20, || format!("only {} artifacts", runs[0].len()))?;
        for ((na, a), (nb, b)) in runs[0].iter().zip(&runs[1]) {
            ensure(na == nb && a == b, || format!("{variant}: {na} differs"))?;
        }
        ensure(runs[0].len() == runs[1].len(), || "artifact sets differ".into())?;
        names += runs[0].len();
    }
    Ok(format!("{names} files bitwise identical across repeated runs"))
}

// 12 ------------------------------------------------------------------------

fn task_bookkeeping() -> Outcome {
    let mut cfg = EnvConfig::default();
    cfg.world.episode_steps = 60;
    cfg.world.node_buffer = 2.0;
    cfg.world.service_radius = 15.0;
    let mut r = rng::seeded(12, 0);
    let (mut worst_data, mut worst_reward) = (0.0f64, 0.0f64);
    let (mut served, mut collided) = (0usize, 0usize);
    for ep in 0..100u64 {
        cfg.sea = SeaCondition::ALL[(ep % 3) as usize];
        cfg.world.auv_count = 1 + (ep % 2) as usize;
        let mut env = TaskEnv::new(&cfg, ep).map_err(|e| e.to_string())?;
        let w = cfg.weights;
        let initial: f64 = env.world().nodes.iter().map(|n| n.buffer).sum();
        let max_power = cfg.world.auv_count as f64 * cfg.world.power_coeff * cfg.vehicle.max_rpm.powi(3);
        let mut energy = 0.0;
        while !env.is_finished() {
            let actions: Vec<Vec<f64>> = (0..env.vehicles().len())
                .map(|i| {
                    let o = env.observe(i);
                    if ep % 4 == 0 {
                        (0..ACTION_DIM).map(|_| r.gen_range(-1.0..=1.0)).collect()
                    } else {
                        // Steer toward the nearest unserved node.
                        let yaw = (o[11].atan2(o[10]) / std::f64::consts::FRAC_PI_4).clamp(-1.0, 1.0);
                        let depth = (o[12] * cfg.obs_range / cfg.depth_step).clamp(-1.0, 1.0);
                        vec![yaw, depth, r.gen_range(0.0..=1.0)]
                    }
                })
                .collect();
            let before: Vec<f64> = env.world().nodes.iter().map(|n| n.buffer).collect();
            let step = env.step(&actions).map_err(|e| e.to_string())?;
            let after: Vec<f64> = env.world().nodes.iter().map(|n| n.buffer).collect();
            let drained: f64 = before.iter().zip(&after).map(|(b, a)| b - a).sum();
            let logged: f64 = step.ticks.iter().map(|t| t.drained).sum();
            worst_data = worst_data.max((drained - logged).abs());
            let mut tick_sum = 0.0;
            for t in &step.ticks {
                ensure(t.power >= 0.0 && t.power <= max_power, || format!("power {} outside [0, {max_power}]", t.power))?;
                energy += t.power * cfg.dt;
                let oracle = w.rate * t.drained / cfg.dt + w.serve * t.newly_served as f64 - w.energy * t.power
                    - w.collision * t.collisions as f64;
                worst_reward = worst_reward.max((t.reward - oracle).abs() / oracle.abs().max(1.0));
                tick_sum += t.reward;
                served += t.newly_served;
                collided += t.collisions;
            }
            worst_reward = worst_reward.max((step.reward - tick_sum).abs() / tick_sum.abs().max(1.0));
        }
        let remaining: f64 = env.world().nodes.iter().map(|n| n.buffer).sum();
        worst_data = worst_data.max((initial - remaining - env.world().total_data()).abs());
        let m = env.world().episode_metrics().map_err(|e| e.to_string())?;
        let duration = env.world().elapsed();
        worst_data = worst_data.max((m.sdr * duration - env.world().total_data()).abs());
        worst_reward = worst_reward.max((m.ec * duration - energy).abs() / energy.max(1.0));
        let fully = env.world().nodes.iter().filter(|n| n.served && n.buffer == 0.0).count();
        ensure(m.ssn == fully, || format!("ssn {} but {fully} drained nodes", m.ssn))?;
    }
    ensure(worst_data <= 1e-9, || format!("data conservation error {worst_data:e}"))?;
    ensure(worst_reward <= 1e-9, || format!("reward decomposition error {worst_reward:e}"))?;
    ensure(served > 0 && collided > 0, || format!("episodes exercised serve={served} collisions={collided}"))?;
    Ok(format!("data error {worst_data:.1e}, reward error {worst_reward:.1e}; {served} nodes served, {collided} collision ticks"))
}

// 4, 8, 10 ------------------------------------------------------------------

struct ToyRuns {
    /// (diffusion, vanilla) final-window mean reward per seed.
    finals: Vec<(f64, f64)>,
    dirs: Vec<PathBuf>,
    elapsed: Duration,
}

fn toy_config(variant: Variant, seed: u64, out: PathBuf) -> RunConfig {
    let mut cfg = RunConfig::parse(TOY).expect("toy config");
    cfg.variant = variant;
    cfg.seed = seed;
    cfg.log_decisions = variant == Variant::Diffusion;
    cfg.out = out;
    cfg
}

fn toy_runs(root: &Path) -> Result<ToyRuns, String> {
    let start = Instant::now();
    let jobs: Vec<(Variant, u64)> = SEEDS.iter().flat_map(|&s| [(Variant::Diffusion, s), (Variant::Vanilla, s)]).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|sc| {
        for _ in 0..workers {
            sc.spawn(|| loop {
                let j = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                let Some(&(variant, seed)) = jobs.get(j) else { break };
                let cfg = toy_config(variant, seed, root.join(format!("{variant}{seed}")));
                let res = train(&cfg).map(|o| {
                    let rows = &o.rows[o.rows.len().saturating_sub(FINAL_WINDOW)..];
                    rows.iter().map(|r| r.reward).sum::<f64>() / rows.len() as f64
                });
                results.lock().unwrap()[j] = Some(res.map_err(|e| e.to_string()));
            });
        }
    });
    let results = results.into_inner().unwrap();
    let mut finals = Vec::new();
    let mut dirs = Vec::new();
    for (k, &seed) in SEEDS.iter().enumerate() {
        let d = results[2 * k].clone().unwrap()?;
        let v = results[2 * k + 1].clone().unwrap()?;
        finals.push((d, v));
        dirs.push(root.join(format!("{}{seed}", Variant::Diffusion)));
    }
    Ok(ToyRuns { finals, dirs, elapsed: start.elapsed() })
}

fn selection_audit(runs: &ToyRuns) -> Outcome {
    let mut decisions = 0usize;
    let mut violations = 0usize;
    for dir in &runs.dirs {
        let text = std::fs::read_to_string(dir.join("decisions.csv")).map_err(|e| e.to_string())?;
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
        let q0 = header.iter().position(|h| *h == "q0").ok_or("no q0 column")?;
        let chosen = header.iter().position(|h| *h == "chosen").ok_or("no chosen column")?;
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            let qs: Vec<f64> = f[q0..].iter().map(|x| x.parse().unwrap()).collect();
            let pick: usize = f[chosen].parse().unwrap();
            decisions += 1;
            if qs.iter().any(|&q| q > qs[pick]) {
                violations += 1;
            }
        }
    }
    ensure(decisions >= 10_000 && violations == 0, || format!("{violations} violations in {decisions} decisions"))?;
    Ok(format!("{decisions} logged decisions, 0 violations"))
}

fn convergence(runs: &ToyRuns) -> Outcome {
    let wins = runs.finals.iter().filter(|(d, v)| d >= v).count();
    let detail: Vec<String> = runs.finals.iter().map(|(d, v)| format!("{d:.1}/{v:.1}")).collect();
    let msg = format!(
        "diffusion >= vanilla in {wins}/5 seeds [{}], {:.0}s for 10 runs",
        detail.join(" "),
        runs.elapsed.as_secs_f64()
    );
    if wins >= 4 && runs.elapsed.as_secs_f64() <= 1800.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn stage_dispersion(runs: &ToyRuns) -> Outcome {
    let mut wins = 0;
    let mut detail = Vec::new();
    for (dir, &seed) in runs.dirs.iter().zip(&SEEDS) {
        let cfg = toy_config(Variant::Diffusion, seed, dir.clone());
        let (_, agent) = checkpoint::load(&dir.join("checkpoints/final"), &cfg).map_err(|e| e.to_string())?;
        ensure(agent.candidates == 5, || format!("K = {}", agent.candidates))?;
        let mut cfg = cfg;
        cfg.stages.stages = vec![1, agent.chain.len()];
        let res = stages(&cfg, &agent, rng::mix(seed, 10)).map_err(|e| e.to_string())?;
        let (first, last) = (res.stages[0].dispersion, res.stages[1].dispersion);
        if first > last {
            wins += 1;
        }
        detail.push(format!("{first:.2}>{last:.2}"));
    }
    let msg = format!("earliest stage more dispersed in {wins}/5 [{}]", detail.join(" "));
    if wins >= 4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let root = tempfile::tempdir().expect("tempdir");
    let mut failed = 0;
    let mut report = |n: usize, name: &str, res: Outcome, t: Duration| {
        let secs = t.as_secs_f64();
        match res {
            Ok(msg) => println!("PASS {n:>2} {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {msg} ({secs:.1}s)");
            }
        }
    };
    let timed = |f: &dyn Fn() -> Outcome| {
        let s = Instant::now();
        let r = f();
        (r, s.elapsed())
    };

    let (r, t) = timed(&schedule_math);
    report(1, "schedule math", r, t);
    let (r, t) = timed(&forward_marginal);
    report(2, "forward marginal", r, t);
    let (r, t) = timed(&gradient_suite);
    report(3, "gradient suite", r, t);

    let s = Instant::now();
    let runs = toy_runs(root.path());
    let train_time = s.elapsed();
    let (r, t) = timed(&|| runs.as_ref().map_err(Clone::clone).and_then(selection_audit));
    report(4, "selection audit", r, t + train_time);

    let (r, t) = timed(&td3_target_properties);
    report(5, "TD3 target", r, t);
    let (r, t) = timed(&s_surface_law);
    report(6, "S-Surface law", r, t);
    let (r, t) = timed(&dynamics_caps);
    report(7, "dynamics caps", r, t);
    let (r, t) = timed(&|| runs.as_ref().map_err(Clone::clone).and_then(convergence));
    report(8, "convergence analog", r, t);
    let (r, t) = timed(&controller_ordering);
    report(9, "controller ordering", r, t);
    let (r, t) = timed(&|| runs.as_ref().map_err(Clone::clone).and_then(stage_dispersion));
    report(10, "stage dispersion", r, t);
    let (r, t) = timed(&|| determinism(root.path()));
    report(11, "determinism", r, t);
    let (r, t) = timed(&task_bookkeeping);
    report(12, "task bookkeeping", r, t);

    if failed > 0 {
        println!("{failed} of 12 criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
