//! Utility landscape of the Optimal Steps Model.
//!
//! An agent minimizes the sum of three terms at a candidate position: the
//! floor-field travel time to the target, a repulsion from every neighbor
//! whose personal space it enters, and a repulsion from nearby obstacles.
//! Neighbor repulsion is built from rings around the torso. Each ring of
//! width `delta` contributes `height * exp(4 / ((x / delta)^2 - 1))` for a
//! torso gap `0 < x < delta`, a bump that falls smoothly to zero at the ring
//! edge. Overlapping torsos are priced at `collision_base * (1 + overlap)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floorfield::FloorField;
use crate::geometry::Point;
use crate::scenario::Topography;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PotentialConfig {
    /// Potential height `h`.
    pub height: f64,
    /// Personal space width `w` (m), measured from the torso edge.
    pub personal_space_width: f64,
    pub intimate_space_width: f64,
    pub intimate_factor: f64,
    pub collision_base: f64,
    pub obstacle_height: f64,
    pub obstacle_width: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            height: 50.0,
            personal_space_width: 1.2,
            intimate_space_width: 0.45,
            intimate_factor: 1.0,
            collision_base: 1000.0,
            obstacle_height: 6.0,
            obstacle_width: 0.8,
        }
    }
}

impl PotentialConfig {
    pub fn with_personal_space(mut self, width: f64, height: f64) -> Self {
        self.personal_space_width = width;
        self.height = height;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.height >= 0.0) {
            return bad("potential height must be non-negative");
        }
        if !(self.intimate_space_width > 0.0 && self.personal_space_width > self.intimate_space_width)
        {
            return bad("personal space width must exceed intimate space width > 0");
        }
        if !(self.intimate_factor >= 0.0) {
            return bad("intimate factor must be non-negative");
        }
        if !(self.collision_base >= self.height * self.intimate_factor) {
            return bad("collision base must be at least height * intimate factor");
        }
        if !(self.obstacle_width > 0.0 && self.obstacle_height >= 0.0) {
            return bad("obstacle width must be positive and obstacle height non-negative");
        }
        Ok(())
    }

    /// Center distance beyond which a neighbor contributes nothing.
    pub fn interaction_range(&self, torso_sum: f64) -> f64 {
        torso_sum + self.personal_space_width
    }
}

/// Compactly supported bump on `[0, width)`: `exp(4 / ((x/width)^2 - 1))`.
fn ring(x: f64, width: f64) -> f64 {
    if x >= width {
        return 0.0;
    }
    let u = x / width;
    (4.0 / (u * u - 1.0)).exp()
}

/// Repulsion felt at center distance `g` from a neighbor, `torso_sum` being
/// the sum of both torso radii.
pub fn agent_potential(g: f64, torso_sum: f64, cfg: &PotentialConfig) -> f64 {
    let x = g - torso_sum;
    if x <= 0.0 {
        return cfg.collision_base * (1.0 - x);
    }
    let mut v = 0.0;
    if x < cfg.personal_space_width {
        v += cfg.height * ring(x, cfg.personal_space_width);
    }
    if x < cfg.intimate_space_width {
        v += cfg.height * cfg.intimate_factor * ring(x, cfg.intimate_space_width);
    }
    v
}

/// Repulsion from the nearest obstacle; `clearance` is measured from the torso edge.
pub fn obstacle_potential(clearance: f64, cfg: &PotentialConfig) -> f64 {
    if clearance <= 0.0 {
        return cfg.collision_base;
    }
    if clearance >= cfg.obstacle_width {
        return 0.0;
    }
    cfg.obstacle_height * ring(clearance, cfg.obstacle_width)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub position: Point,
    pub radius: f64,
}

/// Total potential at `p` for an agent of torso radius `radius`.
pub fn total_potential(
    p: Point,
    radius: f64,
    neighbors: &[Neighbor],
    ff: &FloorField,
    topo: &Topography,
    cfg: &PotentialConfig,
) -> Result<f64> {
    let mut v = ff.query(p)?;
    v += repulsion(p, radius, neighbors, topo, cfg);
    Ok(v)
}

/// Neighbor and obstacle terms of [`total_potential`].
pub(crate) fn repulsion(
    p: Point,
    radius: f64,
    neighbors: &[Neighbor],
    topo: &Topography,
    cfg: &PotentialConfig,
) -> f64 {
    let mut v = 0.0;
    for n in neighbors {
        let r2 = radius + n.radius;
        let g = p.distance(n.position);
        if g < cfg.interaction_range(r2) {
            v += agent_potential(g, r2, cfg);
        }
    }
    let clearance = topo.clearance(p) - radius;
    if clearance < cfg.obstacle_width {
        v += obstacle_potential(clearance, cfg);
    }
    v
}

/// A desired social distance `d` between agent centers (m).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SocialDistance(pub f64);

impl SocialDistance {
    pub const RULE_DOMAIN: (f64, f64) = (1.25, 2.25);
    /// The five distances analyzed by the calibration study.
    pub const STUDY: [SocialDistance; 5] = [
        SocialDistance(1.25),
        SocialDistance(1.5),
        SocialDistance(1.75),
        SocialDistance(2.0),
        SocialDistance(2.25),
    ];

    pub fn meters(self) -> f64 {
        self.0
    }

    fn check_rule_domain(self) -> Result<f64> {
        let (lo, hi) = Self::RULE_DOMAIN;
        if self.0 >= lo && self.0 <= hi {
            Ok(self.0)
        } else {
            Err(Error::Domain(self.0))
        }
    }
}

/// A `(w, h)` pair in personal-space parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleOfThumb {
    pub width: f64,
    pub height: f64,
}

/// Parameters under which the social distance is never violated.
pub fn rule_of_thumb_uc1(d: SocialDistance) -> Result<RuleOfThumb> {
    let d = d.check_rule_domain()?;
    Ok(RuleOfThumb {
        width: 1.75 * d,
        height: 500.0 * d - 200.0,
    })
}

/// Parameters under which the social distance is kept on average.
pub fn rule_of_thumb_uc2(d: SocialDistance) -> Result<RuleOfThumb> {
    let d = d.check_rule_domain()?;
    Ok(RuleOfThumb {
        width: 1.66 * d - 0.75,
        height: 750.0,
    })
}
