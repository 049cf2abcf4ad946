//! Event-driven Optimal Steps Model simulation.
//!
//! Agents step asynchronously: each one owns a clock that advances by
//! `stride / free_flow_speed` per step. On its turn an agent evaluates a
//! fixed set of candidate positions (stay, a ring at the stride length and a
//! ring at half the stride) and moves to the one with the lowest total
//! potential. Candidates that leave free space or overlap another torso are
//! discarded outright.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::floorfield::{FloorField, DEFAULT_SPACING};
use crate::geometry::Point;
use crate::potential::{repulsion, Neighbor, PotentialConfig};
use crate::scenario::{contains_free, scenario_to_json, PopulationSpec, Topography};
use crate::seed::derive_seed;
use crate::spatial::SpatialHash;
use crate::trajectory::{AgentMeta, Frame, FrameEntry, TrajectoryLog};

pub const STRIDE_INTERCEPT: f64 = 0.302;
pub const STRIDE_SLOPE: f64 = 0.235;
const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloorFieldMode {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SimConfig {
    pub potential: PotentialConfig,
    pub floor_field_mode: FloorFieldMode,
    pub dynamic_gamma: f64,
    pub ff_recompute_interval: f64,
    pub floor_field_spacing: f64,
    pub enable_swap: bool,
    pub swap_search_radius: f64,
    pub circle_candidates: usize,
    pub frame_interval: f64,
    pub max_time: f64,
    pub stride_intercept: f64,
    pub stride_slope: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            potential: PotentialConfig::default(),
            floor_field_mode: FloorFieldMode::Static,
            dynamic_gamma: 1.0,
            ff_recompute_interval: 1.0,
            floor_field_spacing: DEFAULT_SPACING,
            enable_swap: false,
            swap_search_radius: 1.0,
            circle_candidates: 20,
            frame_interval: 0.1,
            max_time: 500.0,
            stride_intercept: STRIDE_INTERCEPT,
            stride_slope: STRIDE_SLOPE,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.frame_interval > 0.0) {
            return bad("frame interval must be positive");
        }
        if !(self.max_time > 0.0) {
            return bad("max time must be positive");
        }
        if self.circle_candidates < 4 {
            return bad("at least 4 circle candidates are required");
        }
        if !(self.ff_recompute_interval > 0.0) {
            return bad("floor field recompute interval must be positive");
        }
        if !(self.dynamic_gamma >= 0.0) {
            return bad("density weight must be non-negative");
        }
        if !(self.stride_intercept >= 0.0 && self.stride_slope > 0.0) {
            return bad("stride map must have non-negative intercept and positive slope");
        }
        Ok(())
    }

    pub fn stride_of_speed(&self, v: f64) -> f64 {
        self.stride_intercept + self.stride_slope * v
    }
}

/// Maximum stride length (m) for free-flow speed `v` (m/s).
pub fn stride_of_speed(v: f64) -> f64 {
    STRIDE_INTERCEPT + STRIDE_SLOPE * v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub position: Point,
    pub torso_radius: f64,
    pub free_flow_speed: f64,
    pub stride_length: f64,
    pub next_step_time: f64,
    pub absorbed: bool,
}

impl AgentState {
    pub fn step_interval(&self) -> f64 {
        self.stride_length / self.free_flow_speed
    }

    fn as_neighbor(&self) -> Neighbor {
        Neighbor {
            position: self.position,
            radius: self.torso_radius,
        }
    }
}

/// Places `pop.count` non-overlapping agents uniformly inside the source.
pub fn spawn(
    topo: &Topography,
    pop: &PopulationSpec,
    cfg: &SimConfig,
    rng: &mut impl Rng,
) -> Result<Vec<AgentState>> {
    let r = pop.torso_radius;
    let src = topo.source;
    let (x0, x1) = (src.x + r, src.x + src.width - r);
    let (y0, y1) = (src.y + r, src.y + src.height - r);
    let speeds = Normal::new(pop.speed_mean, pop.speed_std)
        .map_err(|e| Error::Config(format!("speed distribution: {e}")))?;
    let mut agents: Vec<AgentState> = Vec::with_capacity(pop.count);
    for index in 0..pop.count {
        let mut placed = None;
        if x0 <= x1 && y0 <= y1 {
            for _ in 0..PLACEMENT_ATTEMPTS {
                let p = Point::new(rng.gen_range(x0..=x1), rng.gen_range(y0..=y1));
                let overlaps = agents
                    .iter()
                    .any(|a| a.position.distance(p) < a.torso_radius + r);
                if !overlaps && contains_free(topo, p, r) {
                    placed = Some(p);
                    break;
                }
            }
        }
        let position = placed.ok_or(Error::Placement {
            index,
            attempts: PLACEMENT_ATTEMPTS,
        })?;
        let mut speed = speeds.sample(rng);
        let mut tries = 0;
        while !(pop.speed_min..=pop.speed_max).contains(&speed) && tries < 1000 {
            speed = speeds.sample(rng);
            tries += 1;
        }
        let speed = speed.clamp(pop.speed_min, pop.speed_max);
        let stride = cfg.stride_of_speed(speed);
        let next_step_time = rng.gen::<f64>() * stride / speed;
        agents.push(AgentState {
            id: index,
            position,
            torso_radius: r,
            free_flow_speed: speed,
            stride_length: stride,
            next_step_time,
            absorbed: false,
        });
    }
    Ok(agents)
}

/// Candidate positions in evaluation order: the current position, then
/// `n` points on the stride circle, then `n` points on the half-stride circle.
pub fn step_candidates(position: Point, stride: f64, n: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(2 * n + 1);
    out.push(position);
    for (radius, offset) in [(stride, 0.0), (0.5 * stride, 0.5)] {
        for k in 0..n {
            let angle = TAU * (k as f64 + offset) / n as f64;
            out.push(position + Point::new(angle.cos(), angle.sin()) * radius);
        }
    }
    out
}

/// Picks the minimum-potential admissible candidate; ties go to the lowest
/// candidate index, so an agent stays put unless moving is strictly better.
pub fn choose_step(
    agent: &AgentState,
    neighbors: &[Neighbor],
    ff: &FloorField,
    topo: &Topography,
    cfg: &SimConfig,
) -> Point {
    let mut best = agent.position;
    let mut best_value = f64::INFINITY;
    for c in step_candidates(agent.position, agent.stride_length, cfg.circle_candidates) {
        if !contains_free(topo, c, agent.torso_radius) || topo.blocks_path(agent.position, c) {
            continue;
        }
        if neighbors
            .iter()
            .any(|n| c.distance(n.position) < agent.torso_radius + n.radius)
        {
            continue;
        }
        let Ok(target) = ff.query(c) else { continue };
        let v = target + repulsion(c, agent.torso_radius, neighbors, topo, &cfg.potential);
        if v < best_value {
            best_value = v;
            best = c;
        }
    }
    best
}

/// Exchanges the positions of `a` and `b` iff both get strictly closer to
/// their own targets, the exchanged discs stay in free space and the agents
/// are within the swap search radius.
pub fn try_swap(
    a: &mut AgentState,
    b: &mut AgentState,
    ff_a: &FloorField,
    ff_b: &FloorField,
    topo: &Topography,
    cfg: &SimConfig,
) -> bool {
    if !cfg.enable_swap || a.position.distance(b.position) > cfg.swap_search_radius {
        return false;
    }
    let (Ok(a_now), Ok(a_swapped), Ok(b_now), Ok(b_swapped)) = (
        ff_a.query(a.position),
        ff_a.query(b.position),
        ff_b.query(b.position),
        ff_b.query(a.position),
    ) else {
        return false;
    };
    if !(a_swapped < a_now && b_swapped < b_now) {
        return false;
    }
    if !contains_free(topo, b.position, a.torso_radius)
        || !contains_free(topo, a.position, b.torso_radius)
    {
        return false;
    }
    std::mem::swap(&mut a.position, &mut b.position);
    true
}

#[derive(Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    id: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Hex SHA-256 over the scenario document and the run configuration.
pub fn scenario_hash(topo: &Topography, pop: &PopulationSpec, cfg: &SimConfig) -> String {
    let mut h = Sha256::new();
    h.update(scenario_to_json(topo, pop).as_bytes());
    h.update(serde_json::to_string(cfg).expect("config serializes").as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of the spawn stream for a run.
pub fn run_seed(pop: &PopulationSpec, cfg: &SimConfig) -> u64 {
    derive_seed(pop.seed, &[cfg.seed])
}

struct World<'a> {
    topo: &'a Topography,
    cfg: &'a SimConfig,
    agents: Vec<AgentState>,
    grid: SpatialHash,
    max_radius: f64,
    scratch: Vec<usize>,
}

impl World<'_> {
    fn neighbors_of(&mut self, id: usize, radius: f64) -> Vec<Neighbor> {
        let p = self.agents[id].position;
        let mut scratch = std::mem::take(&mut self.scratch);
        self.grid.candidates(p, radius, &mut scratch);
        let out = scratch
            .iter()
            .filter(|&&k| k != id && self.agents[k].position.distance(p) <= radius)
            .map(|&k| self.agents[k].as_neighbor())
            .collect();
        self.scratch = scratch;
        out
    }

    fn nearest(&mut self, id: usize, radius: f64) -> Option<usize> {
        let p = self.agents[id].position;
        let mut scratch = std::mem::take(&mut self.scratch);
        self.grid.candidates(p, radius, &mut scratch);
        let best = scratch
            .iter()
            .filter(|&&k| k != id)
            .map(|&k| (self.agents[k].position.distance(p), k))
            .filter(|&(d, _)| d <= radius)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, k)| k);
        self.scratch = scratch;
        best
    }

    fn frame(&self, time: f64) -> Frame {
        Frame {
            time,
            agents: self
                .agents
                .iter()
                .filter(|a| !a.absorbed)
                .map(|a| FrameEntry {
                    id: a.id,
                    position: a.position,
                })
                .collect(),
        }
    }

    fn positions(&self) -> Vec<Point> {
        self.agents
            .iter()
            .filter(|a| !a.absorbed)
            .map(|a| a.position)
            .collect()
    }

    fn build_field(&self) -> Result<FloorField> {
        match self.cfg.floor_field_mode {
            FloorFieldMode::Static => FloorField::build_static(
                self.topo,
                self.cfg.floor_field_spacing,
                self.max_radius,
            ),
            FloorFieldMode::Dynamic => FloorField::build_dynamic(
                self.topo,
                &self.positions(),
                self.cfg.floor_field_spacing,
                self.cfg.dynamic_gamma,
                self.max_radius,
            ),
        }
    }
}

/// Runs one simulation from spawn until every agent reached the target or
/// `max_time` elapsed.
pub fn simulate(topo: &Topography, pop: &PopulationSpec, cfg: &SimConfig) -> Result<TrajectoryLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(pop, cfg));
    let agents = spawn(topo, pop, cfg, &mut rng)?;
    simulate_agents(topo, agents, cfg, scenario_hash(topo, pop, cfg))
}

/// Runs the event loop on an explicit initial population.
pub fn simulate_agents(
    topo: &Topography,
    agents: Vec<AgentState>,
    cfg: &SimConfig,
    scenario_hash: String,
) -> Result<TrajectoryLog> {
    cfg.validate()?;
    let max_radius = agents.iter().map(|a| a.torso_radius).fold(0.0, f64::max);
    let reach = 2.0 * max_radius + cfg.potential.personal_space_width;
    let mut grid = SpatialHash::new(topo.bounds, reach, agents.len());
    for a in &agents {
        grid.insert(a.id, a.position);
    }
    let mut queue: BinaryHeap<Event> = agents
        .iter()
        .map(|a| Event {
            time: a.next_step_time,
            id: a.id,
        })
        .collect();
    let agent_meta = agents
        .iter()
        .map(|a| AgentMeta {
            torso_radius: a.torso_radius,
            free_flow_speed: a.free_flow_speed,
        })
        .collect();
    let mut world = World {
        topo,
        cfg,
        agents,
        grid,
        max_radius,
        scratch: Vec::new(),
    };

    let mut ff = world.build_field()?;
    let dynamic = cfg.floor_field_mode == FloorFieldMode::Dynamic;
    let mut next_recompute = cfg.ff_recompute_interval;
    let mut frames = Vec::new();
    let mut frame_index: u64 = 0;
    let frame_time = |k: u64| k as f64 * cfg.frame_interval;
    let mut remaining = world.agents.len();

    while let Some(Event { time, id }) = queue.pop() {
        if time > cfg.max_time {
            break;
        }
        while frame_time(frame_index) < time {
            frames.push(world.frame(frame_time(frame_index)));
            frame_index += 1;
        }
        if dynamic && time >= next_recompute {
            ff = world.build_field()?;
            next_recompute =
                ((time / cfg.ff_recompute_interval).floor() + 1.0) * cfg.ff_recompute_interval;
        }

        let range = world.agents[id].stride_length + reach.max(2.0 * max_radius);
        let neighbors = world.neighbors_of(id, range);
        let next = choose_step(&world.agents[id], &neighbors, &ff, topo, cfg);
        world.agents[id].position = next;
        world.grid.update(id, next);

        if cfg.enable_swap {
            if let Some(other) = world.nearest(id, cfg.swap_search_radius) {
                let (a, b) = pair_mut(&mut world.agents, id, other);
                if try_swap(a, b, &ff, &ff, topo, cfg) {
                    let (pa, pb) = (a.position, b.position);
                    world.grid.update(id, pa);
                    world.grid.update(other, pb);
                }
            }
        }

        let agent = &mut world.agents[id];
        if topo.target.contains(agent.position) {
            agent.absorbed = true;
            world.grid.remove(id);
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        } else {
            agent.next_step_time = time + agent.step_interval();
            queue.push(Event {
                time: agent.next_step_time,
                id,
            });
        }
    }

    if remaining == 0 {
        frames.push(world.frame(frame_time(frame_index)));
    } else {
        while frame_time(frame_index) <= cfg.max_time {
            frames.push(world.frame(frame_time(frame_index)));
            frame_index += 1;
        }
    }

    Ok(TrajectoryLog {
        frame_interval: cfg.frame_interval,
        frames,
        agent_meta,
        scenario_hash,
    })
}

fn pair_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (lo, hi) = v.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}
