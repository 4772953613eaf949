//! Sensor-node data-collection world: seabed, node buffers, the surrogate
//! link and power models, collisions and reward bookkeeping.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dynamics::AuvState;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    /// Extent north, east and down (m); the origin is a surface corner.
    pub bounds: [f64; 3],
    pub node_count: usize,
    pub auv_count: usize,
    /// Decision steps per episode.
    pub episode_steps: usize,
    /// Initial buffer per node (MBit).
    pub node_buffer: f64,
    pub service_radius: f64,
    /// Peak link rate at zero range (MBit/s).
    pub max_rate: f64,
    /// Propulsion power per rpm^3 (W).
    pub power_coeff: f64,
    pub safety_margin: f64,
    pub seabed_mean: f64,
    pub seabed_amplitude: f64,
    /// Minimum node-to-node spacing used by placement.
    pub node_spacing: f64,
    /// Nodes sit at least this far above the seabed.
    pub node_clearance: f64,
    pub node_min_depth: f64,
    pub start_depth: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            bounds: [100.0, 100.0, 40.0],
            node_count: 3,
            auv_count: 1,
            episode_steps: 200,
            node_buffer: 5.0,
            service_radius: 10.0,
            max_rate: 10.0,
            power_coeff: 100.0 / 1525f64.powi(3),
            safety_margin: 2.0,
            seabed_mean: 34.0,
            seabed_amplitude: 3.0,
            node_spacing: 10.0,
            node_clearance: 3.0,
            node_min_depth: 5.0,
            start_depth: 5.0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        for (i, b) in self.bounds.iter().enumerate() {
            if !(*b > 0.0 && b.is_finite()) {
                return Err(Error::config(["bounds_north", "bounds_east", "bounds_down"][i], "must be positive"));
            }
        }
        if !(1..=2).contains(&self.auv_count) {
            return Err(Error::config("auv_count", format!("must be 1 or 2, got {}", self.auv_count)));
        }
        if self.episode_steps == 0 {
            return Err(Error::config("episode_steps", "must be at least 1"));
        }
        for (k, v) in [
            ("node_buffer", self.node_buffer),
            ("service_radius", self.service_radius),
            ("max_rate", self.max_rate),
            ("node_spacing", self.node_spacing),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("must be positive, got {v}")));
            }
        }
        for (k, v) in [
            ("power_coeff", self.power_coeff),
            ("safety_margin", self.safety_margin),
            ("seabed_amplitude", self.seabed_amplitude),
            ("node_clearance", self.node_clearance),
            ("node_min_depth", self.node_min_depth),
            ("start_depth", self.start_depth),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("must be non-negative, got {v}")));
            }
        }
        if self.seabed_mean + self.seabed_amplitude > self.bounds[2] {
            return Err(Error::config("seabed_mean", "seabed must lie inside the depth bound"));
        }
        if self.seabed_mean - self.seabed_amplitude - self.node_clearance <= self.node_min_depth {
            return Err(Error::config("node_clearance", "no depth band left for nodes above the seabed"));
        }
        if self.start_depth + self.safety_margin >= self.seabed_mean - self.seabed_amplitude {
            return Err(Error::config("start_depth", "vehicles would start inside the seabed margin"));
        }
        // Each node claims a spacing-sized cell of the horizontal area.
        let cells = (self.bounds[0] / self.node_spacing).floor() * (self.bounds[1] / self.node_spacing).floor();
        if self.node_count as f64 > cells {
            return Err(Error::config(
                "node_count",
                format!("{} nodes do not fit at spacing {} m (capacity {cells})", self.node_count, self.node_spacing),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub rate: f64,
    pub serve: f64,
    pub energy: f64,
    pub collision: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { rate: 1.0, serve: 10.0, energy: 0.01, collision: 100.0 }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("w_rate", self.rate), ("w_serve", self.serve), ("w_energy", self.energy), ("w_collision", self.collision)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("must be non-negative, got {v}")));
            }
        }
        if self.rate + self.serve + self.energy + self.collision == 0.0 {
            return Err(Error::config("w_rate", "at least one reward weight must be positive"));
        }
        Ok(())
    }

    pub fn combine(&self, c: &StepReport) -> f64 {
        self.rate * c.rate + self.serve * c.newly_served as f64 - self.energy * c.power - self.collision * c.collisions as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorNode {
    pub position: [f64; 3],
    /// Remaining data (MBit).
    pub buffer: f64,
    pub initial: f64,
    pub radius: f64,
    pub served: bool,
}

/// Smooth seabed: a fixed sum of three seeded plane waves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seabed {
    mean: f64,
    amplitude: f64,
    waves: Vec<[f64; 4]>,
}

impl Seabed {
    fn generate(cfg: &WorldConfig, rng: &mut Rng) -> Self {
        let weights = [0.5, 0.3, 0.2];
        let waves = weights
            .iter()
            .map(|w| {
                let kn = 2.0 * PI / (cfg.bounds[0] * rng.gen_range(0.5..2.0));
                let ke = 2.0 * PI / (cfg.bounds[1] * rng.gen_range(0.5..2.0));
                [*w, kn, ke, rng.gen_range(0.0..2.0 * PI)]
            })
            .collect();
        Seabed { mean: cfg.seabed_mean, amplitude: cfg.seabed_amplitude, waves }
    }

    /// Seabed depth below the surface at a horizontal position.
    pub fn depth(&self, north: f64, east: f64) -> f64 {
        let relief: f64 = self.waves.iter().map(|[w, kn, ke, ph]| w * (kn * north + ke * east + ph).sin()).sum();
        self.mean + self.amplitude * relief
    }
}

/// Per-tick task outcome. `rate` is the achieved throughput summed over all
/// links (MBit/s), `power` the fleet propulsion power (W).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub drained: f64,
    pub rate: f64,
    pub newly_served: usize,
    pub power: f64,
    pub collisions: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Sum data rate over the episode (MBit/s).
    pub sdr: f64,
    /// Mean propulsion power (W).
    pub ec: f64,
    /// Served node count.
    pub ssn: usize,
    pub collisions: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct World {
    pub cfg: WorldConfig,
    pub nodes: Vec<SensorNode>,
    pub seabed: Seabed,
    elapsed: f64,
    ticks: usize,
    total_data: f64,
    total_energy: f64,
    collisions: usize,
    finished: bool,
}

/// Quadratic falloff link model: `r_max (1 - d/R)^2` inside the radius.
pub fn comm_rate(auv: &[f64; 3], node: &SensorNode, max_rate: f64) -> f64 {
    let d = distance(auv, &node.position);
    if d >= node.radius {
        return 0.0;
    }
    let f = 1.0 - d / node.radius;
    max_rate * f * f
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

const PLACEMENT_ATTEMPTS: usize = 10_000;

impl World {
    pub fn spawn(cfg: &WorldConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng::seeded(seed, rng::stream::ENV);
        let seabed = Seabed::generate(cfg, &mut rng);
        let mut nodes: Vec<SensorNode> = Vec::with_capacity(cfg.node_count);
        let pad = cfg.node_spacing / 2.0;
        for _ in 0..cfg.node_count {
            let mut placed = false;
            for _ in 0..PLACEMENT_ATTEMPTS {
                let n = rng.gen_range(pad.min(cfg.bounds[0] / 2.0)..=(cfg.bounds[0] - pad).max(cfg.bounds[0] / 2.0));
                let e = rng.gen_range(pad.min(cfg.bounds[1] / 2.0)..=(cfg.bounds[1] - pad).max(cfg.bounds[1] / 2.0));
                let floor = seabed.depth(n, e) - cfg.node_clearance;
                let d = rng.gen_range(cfg.node_min_depth..floor);
                let p = [n, e, d];
                if nodes.iter().all(|o| distance(&o.position, &p) >= cfg.node_spacing) {
                    nodes.push(SensorNode { position: p, buffer: cfg.node_buffer, initial: cfg.node_buffer, radius: cfg.service_radius, served: false });
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::config("node_count", format!("could not place {} nodes at spacing {} m", cfg.node_count, cfg.node_spacing)));
            }
        }
        Ok(World {
            cfg: cfg.clone(),
            nodes,
            seabed,
            elapsed: 0.0,
            ticks: 0,
            total_data: 0.0,
            total_energy: 0.0,
            collisions: 0,
            finished: false,
        })
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    pub fn total_data(&self) -> f64 {
        self.total_data
    }

    pub fn served_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.served).count()
    }

    pub fn all_served(&self) -> bool {
        self.nodes.iter().all(|n| n.served)
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Closes the episode; metrics become available afterwards.
    pub fn finish(&mut self) {
        self.finished = true;
    }

    /// Advances bookkeeping by one control tick with the given fleet poses
    /// and propeller speeds.
    pub fn step_task(&mut self, auvs: &[AuvState], rpms: &[f64], weights: &RewardWeights, dt: f64) -> Result<StepReport> {
        if auvs.len() != rpms.len() {
            return Err(Error::shape("step_task rpms", auvs.len(), rpms.len()));
        }
        if self.finished {
            return Err(Error::usage("episode already finished"));
        }
        let mut report = StepReport::default();
        for auv in auvs {
            let pos = auv.position();
            for node in self.nodes.iter_mut().filter(|n| !n.served) {
                let amount = (comm_rate(&pos, node, self.cfg.max_rate) * dt).min(node.buffer);
                if amount > 0.0 {
                    node.buffer -= amount;
                    report.drained += amount;
                    if node.buffer <= 0.0 {
                        node.buffer = 0.0;
                        node.served = true;
                        report.newly_served += 1;
                    }
                }
            }
        }
        report.rate = report.drained / dt;
        report.power = rpms.iter().map(|r| self.cfg.power_coeff * r.powi(3)).sum();
        report.collisions = self.collisions_at(auvs);
        report.reward = weights.combine(&report);
        self.elapsed += dt;
        self.ticks += 1;
        self.total_data += report.drained;
        self.total_energy += report.power * dt;
        self.collisions += report.collisions;
        Ok(report)
    }

    /// Seabed contacts plus close vehicle pairs, each counted once.
    pub fn collisions_at(&self, auvs: &[AuvState]) -> usize {
        let margin = self.cfg.safety_margin;
        let mut count = auvs.iter().filter(|a| self.seabed.depth(a.north, a.east) - a.down < margin).count();
        for i in 0..auvs.len() {
            for j in i + 1..auvs.len() {
                if distance(&auvs[i].position(), &auvs[j].position()) < margin {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn episode_metrics(&self) -> Result<Metrics> {
        if !self.finished {
            return Err(Error::usage("episode metrics requested before the episode finished"));
        }
        let (sdr, ec) = if self.elapsed > 0.0 {
            (self.total_data / self.elapsed, self.total_energy / self.elapsed)
        } else {
            (0.0, 0.0)
        };
        Ok(Metrics { sdr, ec, ssn: self.served_count(), collisions: self.collisions })
    }

    /// Unserved nodes sorted by distance (ties by index), at most `m`.
    pub fn nearest_unserved(&self, pos: &[f64; 3], m: usize) -> Vec<usize> {
        let mut idx: Vec<(f64, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| !n.served)
            .map(|(i, n)| (distance(pos, &n.position), i))
            .collect();
        idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        idx.into_iter().take(m).map(|(_, i)| i).collect()
    }

    /// JSON export of nodes, a seabed sample grid and the given poses.
    pub fn snapshot(&self, auvs: &[AuvState], grid: usize) -> serde_json::Value {
        let g = grid.max(2);
        let mut seabed = Vec::with_capacity(g * g);
        for i in 0..g {
            for j in 0..g {
                let n = self.cfg.bounds[0] * i as f64 / (g - 1) as f64;
                let e = self.cfg.bounds[1] * j as f64 / (g - 1) as f64;
                seabed.push([n, e, self.seabed.depth(n, e)]);
            }
        }
        serde_json::json!({
            "bounds": self.cfg.bounds,
            "nodes": self.nodes,
            "seabed": seabed,
            "auvs": auvs,
        })
    }
}
