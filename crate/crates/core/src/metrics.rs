//! Contact statistics over trajectory logs.
//!
//! A pair of agents is in contact while their center distance is strictly
//! below the social distance `d`. An episode opens at the first frame showing
//! contact and closes at the first later frame where the pair is apart again
//! or one of them has left the world; episodes still open at the last frame
//! close there. Each pair's contact time counts once for each participant, so
//! `t_m = (2 / n) * sum over unordered pairs`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Segment};
use crate::potential::SocialDistance;
use crate::scenario::Topography;
use crate::trajectory::{Frame, TrajectoryLog};

pub const DEFAULT_MEASURE_START: f64 = 20.0;
pub const DEFAULT_STALL_WINDOW: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub i: usize,
    pub j: usize,
    pub start: f64,
    pub end: f64,
}

impl Episode {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactLedger {
    pub d: SocialDistance,
    pub measure_start: f64,
    /// Sorted by `(i, j, start)`.
    pub episodes: Vec<Episode>,
    pub n: usize,
    pub t_m: f64,
    /// Keyed by `(i, j)` with `i < j`; only pairs with at least one episode.
    pub per_pair: BTreeMap<(usize, usize), f64>,
}

impl ContactLedger {
    /// Contact time of agent `i` with agent `j`; symmetric.
    pub fn pair_time(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.per_pair.get(&key).copied().unwrap_or(0.0)
    }

    /// `i,j,t_start,t_end` rows.
    pub fn episodes_csv(&self) -> String {
        let mut out = String::from("i,j,t_start,t_end\n");
        for e in &self.episodes {
            let _ = writeln!(out, "{},{},{:.3},{:.3}", e.i, e.j, e.start, e.end);
        }
        out
    }

    /// `d,t_m,n,episodes` summary line, without trailing newline.
    pub fn summary_line(&self) -> String {
        format!(
            "{},{:.6},{},{}",
            self.d.meters(),
            self.t_m,
            self.n,
            self.episodes.len()
        )
    }
}

fn pairs_below(frame: &Frame, d: f64, out: &mut Vec<(usize, usize)>) {
    out.clear();
    let d2 = d * d;
    let agents = &frame.agents;
    for a in 0..agents.len() {
        for b in (a + 1)..agents.len() {
            if agents[a].position.distance_sq(agents[b].position) < d2 {
                out.push((agents[a].id, agents[b].id));
            }
        }
    }
}

pub fn contact_ledger(log: &TrajectoryLog, d: SocialDistance, t0: f64) -> Result<ContactLedger> {
    if log.frames.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut open: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut episodes = Vec::new();
    let mut current = Vec::new();
    let mut last_time = None;
    for frame in log.frames.iter().filter(|f| f.time >= t0) {
        pairs_below(frame, d.meters(), &mut current);
        // `current` is sorted because frame entries are sorted by id
        let mut k = 0;
        open.retain(|&(i, j), &mut start| {
            while k < current.len() && current[k] < (i, j) {
                k += 1;
            }
            let still = k < current.len() && current[k] == (i, j);
            if !still {
                episodes.push(Episode {
                    i,
                    j,
                    start,
                    end: frame.time,
                });
            }
            still
        });
        for &pair in &current {
            open.entry(pair).or_insert(frame.time);
        }
        last_time = Some(frame.time);
    }
    if let Some(end) = last_time {
        for ((i, j), start) in open {
            episodes.push(Episode { i, j, start, end });
        }
    }
    episodes.sort_by(|a, b| (a.i, a.j).cmp(&(b.i, b.j)).then(a.start.total_cmp(&b.start)));

    let mut per_pair: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in &episodes {
        *per_pair.entry((e.i, e.j)).or_insert(0.0) += e.duration();
    }
    let n = log.agent_count();
    let total = per_pair.values().fold(0.0, |acc, v| acc + v);
    let t_m = if n == 0 { 0.0 } else { 2.0 * total / n as f64 };
    Ok(ContactLedger {
        d,
        measure_start: t0,
        episodes,
        n,
        t_m,
        per_pair,
    })
}

/// Mean nearest-neighbor center distance over all agents in all frames at or
/// after `t0`.
pub fn mean_distance(log: &TrajectoryLog, t0: f64) -> Result<f64> {
    mean_distance_where(log, t0, |_| true)
}

/// As [`mean_distance`], restricted to frames accepted by `keep`.
pub fn mean_distance_where(
    log: &TrajectoryLog,
    t0: f64,
    keep: impl Fn(&Frame) -> bool,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for frame in log.frames.iter().filter(|f| f.time >= t0 && f.agents.len() >= 2) {
        if !keep(frame) {
            continue;
        }
        for a in &frame.agents {
            let nearest = frame
                .agents
                .iter()
                .filter(|b| b.id != a.id)
                .map(|b| a.position.distance(b.position))
                .fold(f64::INFINITY, f64::min);
            sum += nearest;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientAgents(t0));
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CloggingReport {
    pub clogged: bool,
    pub last_exit_time: Option<f64>,
    pub exited_count: usize,
    pub stall_window: f64,
}

/// Detects a stalled bottleneck: agents remain at the end of the log and
/// nobody crossed the exit line during the final `stall_window` seconds.
/// Without an exit line, leaving the world counts as crossing.
pub fn clogging(log: &TrajectoryLog, topo: &Topography, stall_window: f64) -> CloggingReport {
    let mut crossings: Vec<(f64, usize)> = Vec::new();
    for w in log.frames.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        for e in &prev.agents {
            let crossed = match (topo.exit_line, next.position_of(e.id)) {
                (Some(line), Some(p)) => Segment::new(e.position, p).intersects(&line),
                (None, None) => true,
                _ => false,
            };
            if crossed {
                crossings.push((next.time, e.id));
            }
        }
    }
    let end = log.end_time().unwrap_or(0.0);
    let last_exit_time = crossings.last().map(|&(t, _)| t);
    let mut exited: Vec<usize> = crossings.iter().map(|&(_, id)| id).collect();
    exited.sort_unstable();
    exited.dedup();
    let recent = crossings.iter().any(|&(t, _)| t > end - stall_window);
    CloggingReport {
        clogged: log.remaining() > 0 && !recent,
        last_exit_time,
        exited_count: exited.len(),
        stall_window,
    }
}

/// Frames of the congested phase: at least `min_agents` within `radius` of
/// `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Congestion {
    pub center: Point,
    pub radius: f64,
    pub min_agents: usize,
}

impl Congestion {
    /// 20 agents within 10 m of the built-in bottleneck's corridor entrance.
    pub fn bottleneck() -> Self {
        use crate::scenario::bottleneck::{CORRIDOR_ENTRANCE_X, WIDTH};
        Congestion {
            center: Point::new(CORRIDOR_ENTRANCE_X, 0.5 * WIDTH),
            radius: 10.0,
            min_agents: 20,
        }
    }

    pub fn holds(&self, frame: &Frame) -> bool {
        let r2 = self.radius * self.radius;
        frame
            .agents
            .iter()
            .filter(|a| a.position.distance_sq(self.center) <= r2)
            .count()
            >= self.min_agents
    }
}
