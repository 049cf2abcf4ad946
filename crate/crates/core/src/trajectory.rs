//! Recorded agent positions, sampled at a fixed frame interval.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub id: usize,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub time: f64,
    /// Agents present in the world, sorted by id.
    pub agents: Vec<FrameEntry>,
}

impl Frame {
    pub fn position_of(&self, id: usize) -> Option<Point> {
        self.agents
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|k| self.agents[k].position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentMeta {
    pub torso_radius: f64,
    pub free_flow_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrajectoryLog {
    pub frame_interval: f64,
    pub frames: Vec<Frame>,
    /// Indexed by agent id.
    pub agent_meta: Vec<AgentMeta>,
    pub scenario_hash: String,
}

impl TrajectoryLog {
    pub fn agent_count(&self) -> usize {
        self.agent_meta.len()
    }

    pub fn start_time(&self) -> Option<f64> {
        self.frames.first().map(|f| f.time)
    }

    pub fn end_time(&self) -> Option<f64> {
        self.frames.last().map(|f| f.time)
    }

    /// Agents still present in the last frame.
    pub fn remaining(&self) -> usize {
        self.frames.last().map_or(0, |f| f.agents.len())
    }

    /// `t,agent_id,x,y,radius`, one row per agent per frame.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,agent_id,x,y,radius\n");
        for f in &self.frames {
            for e in &f.agents {
                let r = self.agent_meta[e.id].torso_radius;
                let _ = writeln!(
                    out,
                    "{:.3},{},{:.6},{:.6},{:.6}",
                    f.time, e.id, e.position.x, e.position.y, r
                );
            }
        }
        out
    }

    /// Builds a log from per-frame position lists; used for synthetic logs.
    pub fn from_positions(
        frame_interval: f64,
        start: f64,
        torso_radius: f64,
        frames: Vec<Vec<(usize, Point)>>,
    ) -> Self {
        let n = frames
            .iter()
            .flat_map(|f| f.iter().map(|&(id, _)| id + 1))
            .max()
            .unwrap_or(0);
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(k, mut agents)| {
                agents.sort_by_key(|&(id, _)| id);
                Frame {
                    time: start + k as f64 * frame_interval,
                    agents: agents
                        .into_iter()
                        .map(|(id, position)| FrameEntry { id, position })
                        .collect(),
                }
            })
            .collect();
        TrajectoryLog {
            frame_interval,
            frames,
            agent_meta: vec![
                AgentMeta {
                    torso_radius,
                    free_flow_speed: 1.34,
                };
                n
            ],
            scenario_hash: String::new(),
        }
    }
}
