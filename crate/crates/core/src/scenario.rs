//! World geometry, agent population parameters and the scenario file format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floorfield::{FloorField, DEFAULT_SPACING};
use crate::geometry::{Point, Polygon, Rect, Segment};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topography {
    pub bounds: Rect,
    pub obstacles: Vec<Polygon>,
    pub source: Rect,
    pub target: Rect,
    /// Downstream end of the bottleneck, used by the clogging detector.
    pub exit_line: Option<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PopulationSpec {
    pub count: usize,
    pub torso_radius: f64,
    pub speed_mean: f64,
    pub speed_std: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub seed: u64,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec {
            count: 100,
            torso_radius: 0.195,
            speed_mean: 1.34,
            speed_std: 0.26,
            speed_min: 0.5,
            speed_max: 2.2,
            seed: 0,
        }
    }
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::Validation("population count must be at least 1".into()));
        }
        if !(self.torso_radius > 0.0) {
            return Err(Error::Validation("torso radius must be positive".into()));
        }
        if !(self.speed_min > 0.0
            && self.speed_min <= self.speed_mean
            && self.speed_mean <= self.speed_max)
        {
            return Err(Error::Validation(
                "speeds must satisfy 0 < speedMin <= speedMean <= speedMax".into(),
            ));
        }
        if !(self.speed_std >= 0.0) {
            return Err(Error::Validation("speed standard deviation must be non-negative".into()));
        }
        Ok(())
    }
}

/// Corridor dimensions of the built-in bottleneck.
pub mod bottleneck {
    pub const LENGTH: f64 = 65.0;
    pub const WIDTH: f64 = 12.0;
    pub const CORRIDOR_WIDTH: f64 = 1.2;
    pub const CORRIDOR_LENGTH: f64 = 5.0;
    /// x coordinate where agents leave the corridor (downstream, towards the target).
    pub const CORRIDOR_EXIT_X: f64 = 10.0;
    /// x coordinate where agents enter the corridor coming from the source.
    pub const CORRIDOR_ENTRANCE_X: f64 = CORRIDOR_EXIT_X + CORRIDOR_LENGTH;
    /// Gap between the corridor entrance and the near edge of the source.
    pub const SOURCE_OFFSET: f64 = 30.0;
}

/// The 12 m x 65 m bottleneck: agents spawn on the right and walk left
/// through a 1.2 m wide, 5 m long corridor towards the target.
pub fn bottleneck_scenario() -> (Topography, PopulationSpec) {
    use bottleneck::*;
    let lo = 0.5 * (WIDTH - CORRIDOR_WIDTH);
    let hi = lo + CORRIDOR_WIDTH;
    let topo = Topography {
        bounds: Rect::new(0.0, 0.0, LENGTH, WIDTH),
        obstacles: vec![
            Rect::new(CORRIDOR_EXIT_X, 0.0, CORRIDOR_LENGTH, lo).to_polygon(),
            Rect::new(CORRIDOR_EXIT_X, hi, CORRIDOR_LENGTH, WIDTH - hi).to_polygon(),
        ],
        source: Rect::new(CORRIDOR_ENTRANCE_X + SOURCE_OFFSET, 1.0, 6.0, 10.0),
        target: Rect::new(4.0, 2.0, 2.0, 8.0),
        exit_line: Some(Segment::new(
            Point::new(CORRIDOR_EXIT_X, lo),
            Point::new(CORRIDOR_EXIT_X, hi),
        )),
    };
    (topo, PopulationSpec::default())
}

impl Topography {
    /// Distance from `p` to the nearest wall: an obstacle or the boundary of
    /// the world. Zero inside an obstacle or outside the bounds.
    pub fn clearance(&self, p: Point) -> f64 {
        let b = &self.bounds;
        let to_bounds = (p.x - b.x)
            .min(b.x + b.width - p.x)
            .min(p.y - b.y)
            .min(b.y + b.height - p.y)
            .max(0.0);
        self.obstacles
            .iter()
            .map(|o| o.distance(p))
            .fold(to_bounds, f64::min)
    }

    /// True if the straight segment from `a` to `b` cuts through an obstacle.
    pub fn blocks_path(&self, a: Point, b: Point) -> bool {
        let step = Segment::new(a, b);
        self.obstacles.iter().any(|o| {
            o.contains(b) || o.edges().any(|(p, q)| step.intersects(&Segment::new(p, q)))
        })
    }

    /// Checks every invariant except reachability, which needs a floor field.
    pub fn validate_geometry(&self) -> Result<()> {
        let b = &self.bounds;
        if !(b.width > 0.0 && b.height > 0.0) {
            return Err(Error::Validation("bounds must have positive extent".into()));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.vertices.len() < 3 {
                return Err(Error::Validation(format!("obstacle {i} has fewer than 3 vertices")));
            }
            if !o.is_simple() {
                return Err(Error::Validation(format!("obstacle {i} is not a simple polygon")));
            }
        }
        for (name, r) in [("source", &self.source), ("target", &self.target)] {
            if !(r.width > 0.0 && r.height > 0.0) {
                return Err(Error::Validation(format!("{name} must have positive extent")));
            }
            if !b.contains_rect(r) {
                return Err(Error::Validation(format!("{name} lies outside bounds")));
            }
            if let Some(i) = self.obstacles.iter().position(|o| rect_overlaps_polygon(r, o)) {
                return Err(Error::Validation(format!("{name} overlaps obstacle {i}")));
            }
        }
        Ok(())
    }

    /// Full validation, including that every source cell reaches the target.
    pub fn validate(&self, torso_radius: f64) -> Result<()> {
        self.validate_geometry()?;
        FloorField::build_static(self, DEFAULT_SPACING, torso_radius)?;
        Ok(())
    }
}

/// True iff the disc of radius `r` at `p` lies inside the bounds and touches
/// no obstacle interior.
pub fn contains_free(topo: &Topography, p: Point, r: f64) -> bool {
    let b = &topo.bounds;
    if p.x - r < b.x || p.x + r > b.x + b.width || p.y - r < b.y || p.y + r > b.y + b.height {
        return false;
    }
    topo.obstacles.iter().all(|o| o.distance(p) >= r)
}

/// Interior overlap test; shared boundaries do not count.
fn rect_overlaps_polygon(rect: &Rect, poly: &Polygon) -> bool {
    let rp = rect.to_polygon();
    let strictly_inside = |r: &Rect, p: Point| {
        p.x > r.x && p.x < r.x + r.width && p.y > r.y && p.y < r.y + r.height
    };
    if poly.vertices.iter().any(|&v| strictly_inside(rect, v)) {
        return true;
    }
    if poly.contains(rect.center()) && poly.boundary_distance(rect.center()) > 0.0 {
        return true;
    }
    for (a, b) in rp.edges() {
        for (c, d) in poly.edges() {
            if proper_crossing(a, b, c, d) {
                return true;
            }
        }
    }
    // Polygon edge passing through the rectangle interior without a proper crossing
    // (e.g. collinear with a corner); probe midpoints.
    poly.edges().any(|(a, b)| strictly_inside(rect, (a + b) * 0.5))
}

fn proper_crossing(a: Point, b: Point, c: Point, d: Point) -> bool {
    use crate::geometry::orient;
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RectDoc {
    x: f64,
    y: f64,
    width: f64,
    height: f64,
}

impl From<Rect> for RectDoc {
    fn from(r: Rect) -> Self {
        RectDoc {
            x: r.x,
            y: r.y,
            width: r.width,
            height: r.height,
        }
    }
}

impl From<RectDoc> for Rect {
    fn from(r: RectDoc) -> Self {
        Rect::new(r.x, r.y, r.width, r.height)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ScenarioDoc {
    version: u32,
    bounds: RectDoc,
    obstacles: Vec<Vec<[f64; 2]>>,
    source: RectDoc,
    target: RectDoc,
    population: PopulationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exit_line: Option<[[f64; 2]; 2]>,
}

/// Serializes a scenario as the versioned JSON document.
pub fn scenario_to_json(topo: &Topography, pop: &PopulationSpec) -> String {
    let pt = |p: Point| [p.x, p.y];
    let doc = ScenarioDoc {
        version: SCENARIO_VERSION,
        bounds: topo.bounds.into(),
        obstacles: topo
            .obstacles
            .iter()
            .map(|o| o.vertices.iter().map(|&v| pt(v)).collect())
            .collect(),
        source: topo.source.into(),
        target: topo.target.into(),
        population: pop.clone(),
        exit_line: topo.exit_line.map(|s| [pt(s.a), pt(s.b)]),
    };
    serde_json::to_string_pretty(&doc).expect("scenario document serializes")
}

/// Parses and validates a scenario document.
pub fn scenario_from_json(text: &str) -> Result<(Topography, PopulationSpec)> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.version != SCENARIO_VERSION {
        return Err(Error::Parse(format!(
            "unsupported version {} (expected {SCENARIO_VERSION})",
            doc.version
        )));
    }
    let pt = |p: [f64; 2]| Point::new(p[0], p[1]);
    let topo = Topography {
        bounds: doc.bounds.into(),
        obstacles: doc
            .obstacles
            .into_iter()
            .map(|o| Polygon::new(o.into_iter().map(pt).collect()))
            .collect(),
        source: doc.source.into(),
        target: doc.target.into(),
        exit_line: doc.exit_line.map(|[a, b]| Segment::new(pt(a), pt(b))),
    };
    let pop = doc.population;
    pop.validate()?;
    topo.validate(pop.torso_radius)?;
    Ok((topo, pop))
}

pub fn save_scenario(path: &Path, topo: &Topography, pop: &PopulationSpec) -> Result<()> {
    fs::write(path, scenario_to_json(topo, pop)).map_err(|e| Error::io(path, e))
}

pub fn load_scenario(path: &Path) -> Result<(Topography, PopulationSpec)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    scenario_from_json(&text)
}
