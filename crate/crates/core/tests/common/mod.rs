#![allow(dead_code)]

use osm_core::geometry::{orient, Point};
use osm_core::potential::SocialDistance;
use osm_core::trajectory::{AgentMeta, TrajectoryLog};
use rand::Rng;

/// Contact episodes `(i, j, start, end)` and `t_m` counted pair by pair
/// straight from the frames.
pub fn brute_force_contacts(log: &TrajectoryLog, d: SocialDistance, t0: f64) -> (Vec<(usize, usize, f64, f64)>, f64) {
    let frames: Vec<_> = log.frames.iter().filter(|f| f.time >= t0).collect();
    let n = log.agent_count();
    let mut episodes = Vec::new();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let touching: Vec<bool> = frames
                .iter()
                .map(|f| match (f.position_of(i), f.position_of(j)) {
                    (Some(a), Some(b)) => a.distance(b) < d.meters(),
                    _ => false,
                })
                .collect();
            let mut pair_total = 0.0;
            let mut k = 0;
            while k < frames.len() {
                if !touching[k] {
                    k += 1;
                    continue;
                }
                let start = k;
                while k < frames.len() && touching[k] {
                    k += 1;
                }
                let end = if k < frames.len() { frames[k].time } else { frames[frames.len() - 1].time };
                episodes.push((i, j, frames[start].time, end));
                pair_total += end - frames[start].time;
            }
            total += pair_total;
        }
    }
    let t_m = if n == 0 { 0.0 } else { 2.0 * total / n as f64 };
    (episodes, t_m)
}

/// A random walk of `2..=12` agents that enter and leave at random frames.
pub fn random_log(rng: &mut impl Rng) -> TrajectoryLog {
    let n = rng.gen_range(2..=12);
    let frames = rng.gen_range(5..=60);
    let interval = [0.1, 0.2, 0.4][rng.gen_range(0..3)];
    let mut pos: Vec<Point> = (0..n)
        .map(|_| Point::new(rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)))
        .collect();
    let life: Vec<(usize, usize)> = (0..n)
        .map(|_| {
            let a = rng.gen_range(0..frames);
            (a, rng.gen_range(a..=frames))
        })
        .collect();
    let mut out = Vec::new();
    for k in 0..frames {
        let mut frame = Vec::new();
        for id in 0..n {
            pos[id] = pos[id] + Point::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
            if (life[id].0..life[id].1).contains(&k) {
                frame.push((id, pos[id]));
            }
        }
        out.push(frame);
    }
    let mut log = TrajectoryLog::from_positions(interval, 0.0, 0.195, out);
    // agents absent from every frame still count towards n
    while log.agent_meta.len() < n {
        log.agent_meta.push(AgentMeta {
            torso_radius: 0.195,
            free_flow_speed: 1.34,
        });
    }
    log
}

/// Hull vertices by brute force: the directed edge `a -> b` lies on the
/// hull iff no point is strictly to its right and collinear points lie on
/// the closed segment. Sorted lexicographically.
pub fn brute_force_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 1 {
        return pts;
    }
    let mut out = Vec::new();
    for &a in &pts {
        for &b in &pts {
            if a == b {
                continue;
            }
            let edge = pts.iter().all(|&c| {
                let o = orient(a, b, c);
                if o != 0.0 {
                    return o > 0.0;
                }
                let t = (c - a).dot(b - a);
                t >= 0.0 && t <= (b - a).dot(b - a)
            });
            if edge {
                out.push(a);
                out.push(b);
            }
        }
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    out.dedup();
    out
}

pub fn sorted(mut v: Vec<Point>) -> Vec<Point> {
    v.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    v
}

/// First pair of agents in any frame whose torsos overlap by more than 1e-9.
pub fn find_overlap(log: &TrajectoryLog) -> Option<(f64, usize, usize, f64)> {
    for f in &log.frames {
        for (k, a) in f.agents.iter().enumerate() {
            for b in &f.agents[k + 1..] {
                let min = log.agent_meta[a.id].torso_radius + log.agent_meta[b.id].torso_radius;
                let g = a.position.distance(b.position);
                if g < min - 1e-9 {
                    return Some((f.time, a.id, b.id, g));
                }
            }
        }
    }
    None
}
