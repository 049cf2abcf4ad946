//! Post-processing of sweep results: zero-contact sets, contact-time level
//! bands, their convex hulls and verification of the rule-of-thumb
//! parameter choices.
//!
//! Hulls are built in grid units, where cell `(wi, hi)` sits at the integer
//! point `(wi, hi)`. This puts `w` (meters) and `h` (utility) on the same
//! footing and keeps every orientation test exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{orient, point_segment_distance, Point};
use crate::potential::{rule_of_thumb_uc1, rule_of_thumb_uc2, RuleOfThumb, SocialDistance};
use crate::sweep::{normalize, SweepResult};

pub const DEFAULT_LEVEL: f64 = 10.0;
pub const DEFAULT_LEVEL_TOLERANCE: f64 = 2.0;
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum UseCase {
    /// No contact at all: `t_m = 0`.
    NoContact,
    /// Contacts kept near a target average: `t_m ≈ t*`.
    AverageContact,
}

impl UseCase {
    pub fn number(self) -> u8 {
        match self {
            UseCase::NoContact => 1,
            UseCase::AverageContact => 2,
        }
    }

    pub fn rule(self, d: SocialDistance) -> Result<RuleOfThumb> {
        match self {
            UseCase::NoContact => rule_of_thumb_uc1(d),
            UseCase::AverageContact => rule_of_thumb_uc2(d),
        }
    }
}

impl From<UseCase> for u8 {
    fn from(u: UseCase) -> u8 {
        u.number()
    }
}

impl TryFrom<u8> for UseCase {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            1 => Ok(UseCase::NoContact),
            2 => Ok(UseCase::AverageContact),
            _ => Err(Error::Config(format!("unknown use case {n}, expected 1 or 2"))),
        }
    }
}

/// Target level and half-width of the use-case-2 band (seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub level: f64,
    pub tolerance: f64,
}

impl Default for Band {
    fn default() -> Self {
        Band {
            level: DEFAULT_LEVEL,
            tolerance: DEFAULT_LEVEL_TOLERANCE,
        }
    }
}

/// Grid cells selected by a criterion on one distance column.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub d: SocialDistance,
    pub cells: Vec<usize>,
    pub points: Vec<(f64, f64)>,
}

impl Selection {
    fn from_filter(result: &SweepResult, d: SocialDistance, keep: impl Fn(f64) -> bool) -> Result<Self> {
        let col = result.column(d)?;
        let cells: Vec<usize> = result
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_ok() && keep(c.t_m[col]))
            .map(|(k, _)| k)
            .collect();
        let points = cells.iter().map(|&k| result.grid.points[k]).collect();
        Ok(Selection { d, cells, points })
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn warning(&self) -> Option<String> {
        self.is_empty()
            .then(|| format!("no grid cell qualifies for d = {:?}", self.d.meters()))
    }
}

/// Cells with exactly zero contact time at `d`, clogged or not.
pub fn zero_set(result: &SweepResult, d: SocialDistance) -> Result<Selection> {
    Selection::from_filter(result, d, |t| t == 0.0)
}

/// Cells with `|t_m(d) - level| <= tolerance`.
pub fn level_band(result: &SweepResult, d: SocialDistance, band: Band) -> Result<Selection> {
    if !(band.tolerance >= 0.0) {
        return Err(Error::Config(format!("band tolerance must be >= 0, got {}", band.tolerance)));
    }
    Selection::from_filter(result, d, |t| (t - band.level).abs() <= band.tolerance)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Hull {
    Empty,
    Point(Point),
    Segment(Point, Point),
    /// Counterclockwise, no three consecutive vertices collinear.
    Polygon(Vec<Point>),
}

impl Hull {
    pub fn vertices(&self) -> Vec<Point> {
        match self {
            Hull::Empty => vec![],
            Hull::Point(p) => vec![*p],
            Hull::Segment(a, b) => vec![*a, *b],
            Hull::Polygon(v) => v.clone(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !matches!(self, Hull::Polygon(_))
    }

    /// Euclidean distance from `p` to the hull; zero inside or on it.
    pub fn distance(&self, p: Point) -> f64 {
        match self {
            Hull::Empty => f64::INFINITY,
            Hull::Point(a) => p.distance(*a),
            Hull::Segment(a, b) => point_segment_distance(p, *a, *b),
            Hull::Polygon(v) => {
                let n = v.len();
                let inside = (0..n).all(|i| orient(v[i], v[(i + 1) % n], p) >= -EPS);
                if inside {
                    return 0.0;
                }
                (0..n)
                    .map(|i| point_segment_distance(p, v[i], v[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Vertices from the minimum-`x` vertex counterclockwise to the
    /// minimum-`y` vertex: the frontier facing the origin.
    pub fn lower_left_chain(&self) -> Vec<Point> {
        let v = self.vertices();
        if v.len() < 3 {
            return v;
        }
        let argmin = |key: fn(&Point) -> (f64, f64)| {
            (0..v.len())
                .min_by(|&a, &b| {
                    let (ka, kb) = (key(&v[a]), key(&v[b]));
                    ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
                })
                .expect("non-empty")
        };
        let start = argmin(|p| (p.x, p.y));
        let end = argmin(|p| (p.y, p.x));
        let mut out = vec![v[start]];
        let mut k = start;
        while k != end {
            k = (k + 1) % v.len();
            out.push(v[k]);
        }
        out
    }
}

/// Monotone-chain convex hull. Duplicate and collinear boundary points are
/// not vertices.
pub fn convex_hull(points: &[Point]) -> Hull {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    match pts.len() {
        0 => return Hull::Empty,
        1 => return Hull::Point(pts[0]),
        _ => {}
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        Hull::Segment(pts[0], pts[pts.len() - 1])
    } else {
        Hull::Polygon(lower)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndifferenceCurve {
    pub d: SocialDistance,
    pub use_case: UseCase,
    /// Hull vertices in `(w, h)`, counterclockwise.
    pub hull: Vec<(f64, f64)>,
    pub member_cells: Vec<usize>,
}

fn grid_point(result: &SweepResult, k: usize) -> Point {
    let (wi, hi) = result.grid.indices(k);
    Point::new(wi as f64, hi as f64)
}

fn selection_hull(result: &SweepResult, sel: &Selection) -> Hull {
    let pts: Vec<Point> = sel.cells.iter().map(|&k| grid_point(result, k)).collect();
    convex_hull(&pts)
}

fn selection(result: &SweepResult, d: SocialDistance, use_case: UseCase, band: Band) -> Result<Selection> {
    match use_case {
        UseCase::NoContact => zero_set(result, d),
        UseCase::AverageContact => level_band(result, d, band),
    }
}

/// Convex hull of the zero set (use case 1) or of the level band (use case 2).
pub fn indifference_curve(
    result: &SweepResult,
    d: SocialDistance,
    use_case: UseCase,
    band: Band,
) -> Result<IndifferenceCurve> {
    let sel = selection(result, d, use_case, band)?;
    let hull = selection_hull(result, &sel)
        .vertices()
        .into_iter()
        .map(|p| {
            let k = result.grid.index(p.x as usize, p.y as usize);
            result.grid.points[k]
        })
        .collect();
    Ok(IndifferenceCurve {
        d,
        use_case,
        hull,
        member_cells: sel.cells,
    })
}

/// `use_case,d,vertex_index,w,h` rows.
pub fn curves_csv(curves: &[IndifferenceCurve]) -> String {
    let mut out = String::from("use_case,d,vertex_index,w,h\n");
    for c in curves {
        for (k, (w, h)) in c.hull.iter().enumerate() {
            let _ = writeln!(out, "{},{},{k},{w},{h}", c.use_case.number(), c.d.meters());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdict {
    pub use_case: UseCase,
    pub d: f64,
    pub point: (f64, f64),
    pub pass: bool,
    /// Grid units from the rule point to the accepted region: the zero-set
    /// hull for use case 1, the nearest band cell (max-norm) for use case 2.
    pub distance_to_hull: f64,
    /// Set when the verdict could not be decided, e.g. an empty zero set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inconclusive: Option<String>,
}

impl Verdict {
    /// `uc1 d=1.5 point=(2.625,550) PASS`
    pub fn line(&self) -> String {
        let status = match (&self.inconclusive, self.pass) {
            (Some(_), _) => "INCONCLUSIVE",
            (None, true) => "PASS",
            (None, false) => "FAIL",
        };
        format!(
            "uc{} d={:?} point=({},{}) {status}",
            self.use_case.number(),
            self.d,
            tidy(self.point.0),
            tidy(self.point.1)
        )
    }
}

/// Drops floating-point noise below a micro-unit for display.
fn tidy(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Checks the rule-of-thumb point for `(d, use_case)` against the sweep.
pub fn verify_rule(result: &SweepResult, d: SocialDistance, use_case: UseCase, band: Band) -> Result<Verdict> {
    let rule = use_case.rule(d)?;
    let sel = selection(result, d, use_case, band)?;
    let (gx, gy) = result.grid.to_grid_units(rule.width, rule.height);
    let p = Point::new(gx, gy);
    let distance = match use_case {
        UseCase::NoContact => selection_hull(result, &sel).distance(p),
        UseCase::AverageContact => sel
            .cells
            .iter()
            .map(|&k| {
                let c = grid_point(result, k);
                (c.x - p.x).abs().max((c.y - p.y).abs())
            })
            .fold(f64::INFINITY, f64::min),
    };
    let pass = match use_case {
        UseCase::NoContact => distance <= EPS,
        UseCase::AverageContact => distance <= 1.0 + EPS,
    };
    Ok(Verdict {
        use_case,
        d: d.meters(),
        point: (rule.width, rule.height),
        pass: pass && !sel.is_empty(),
        distance_to_hull: distance,
        inconclusive: sel.warning(),
    })
}

/// Maps `(w, h)` to SVG pixel coordinates for a plot of the sweep domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotFrame {
    pub w_range: (f64, f64),
    pub h_range: (f64, f64),
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl PlotFrame {
    pub fn for_result(result: &SweepResult) -> Self {
        let g = &result.grid;
        let (hw, hh) = (0.5 * g.w_step(), 0.5 * g.h_step());
        PlotFrame {
            w_range: (g.w_bounds.0 - hw, g.w_bounds.1 + hw),
            h_range: (g.h_bounds.0 - hh, g.h_bounds.1 + hh),
            left: 70.0,
            top: 30.0,
            width: 480.0,
            height: 400.0,
        }
    }

    pub fn x(&self, w: f64) -> f64 {
        self.left + (w - self.w_range.0) / (self.w_range.1 - self.w_range.0) * self.width
    }

    pub fn y(&self, h: f64) -> f64 {
        self.top + (1.0 - (h - self.h_range.0) / (self.h_range.1 - self.h_range.0)) * self.height
    }
}

/// Five-stop perceptual ramp from dark blue (0) to yellow (1).
const RAMP: [(u8, u8, u8); 5] = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)];
const MISSING: &str = "#bbbbbb";

/// Fill color for normalized value `v` on a scale ending at `vmax`.
pub fn color(v: f64, vmax: f64) -> String {
    let t = (v / vmax).clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let k = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - k as f64;
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    let (a, b) = (RAMP[k], RAMP[k + 1]);
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn svg_open(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<title>{title}</title>"#);
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

fn axes(out: &mut String, f: &PlotFrame, w_ticks: &[f64], h_ticks: &[f64]) {
    let (x0, y0, x1, y1) = (f.left, f.top, f.left + f.width, f.top + f.height);
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, f.width, f.height);
    for &w in w_ticks {
        let x = f.x(w);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y1 + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y1 + 18.0, tidy(w));
    }
    for &h in h_ticks {
        let y = f.y(h);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, tidy(h));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">personal space width w (m)</text>"#, (x0 + x1) / 2.0, y1 + 36.0);
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">potential height h</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
}

fn polyline(out: &mut String, f: &PlotFrame, pts: &[(f64, f64)], closed: bool, style: &str, attrs: &str) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|&(w, h)| format!("{:.2},{:.2}", f.x(w), f.y(h))).collect();
    let tag = if closed { "polygon" } else { "polyline" };
    let _ = writeln!(out, r#"<{tag} points="{}" fill="none" {style} {attrs}/>"#, coords.join(" "));
}

fn heatmap_svg(result: &SweepResult, normalized: &[Option<Vec<f64>>], col: usize, curves: &[IndifferenceCurve]) -> String {
    let d = result.d_list[col];
    let f = PlotFrame::for_result(result);
    let g = &result.grid;
    let vmax = normalized
        .iter()
        .flatten()
        .map(|v| v[col])
        .fold(1.0, f64::max);
    let mut out = String::new();
    svg_open(&mut out, 700.0, 500.0, &format!("normalized contact time, d = {} m", d.meters()));
    let (cw, ch) = (f.width / g.n_w as f64, f.height / g.n_h as f64);
    for (k, cell) in result.cells.iter().enumerate() {
        let (w, h) = (cell.w, cell.h);
        let fill = match &normalized[k] {
            Some(v) => color(v[col], vmax),
            None => MISSING.to_string(),
        };
        let _ = writeln!(
            out,
            r#"<rect class="cell" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}" data-w="{w}" data-h="{h}"/>"#,
            f.x(w) - cw / 2.0,
            f.y(h) - ch / 2.0,
            cw,
            ch
        );
    }
    axes(&mut out, &f, &ticks(g.w_bounds.0, g.w_bounds.1), &ticks(g.h_bounds.0, g.h_bounds.1));
    for c in curves.iter().filter(|c| c.d == d) {
        let style = match c.use_case {
            UseCase::NoContact => r#"stroke="white" stroke-width="2""#,
            UseCase::AverageContact => r#"stroke="white" stroke-width="2" stroke-dasharray="6 4""#,
        };
        polyline(&mut out, &f, &c.hull, true, style, &format!(r#"class="hull" data-use-case="{}""#, c.use_case.number()));
    }
    let mut entries = vec![0.0, 0.5, 1.0, vmax];
    entries.dedup();
    let lx = f.left + f.width + 20.0;
    let _ = writeln!(out, r#"<text x="{lx}" y="{}">t_m / t_m0</text>"#, f.top + 10.0);
    for (k, v) in entries.iter().enumerate() {
        let y = f.top + 25.0 + 22.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<rect class="legend" x="{lx}" y="{y}" width="16" height="16" fill="{}" data-value="{v}"/>"#,
            color(*v, vmax)
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}">{:.2}</text>"#, lx + 22.0, y + 12.0, v);
    }
    out.push_str("</svg>\n");
    out
}

const PALETTE: [&str; 5] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"];

fn curves_svg(result: &SweepResult, curves: &[IndifferenceCurve]) -> Result<String> {
    let f = PlotFrame::for_result(result);
    let g = &result.grid;
    let mut out = String::new();
    svg_open(&mut out, 700.0, 500.0, "indifference curves and rules of thumb");
    axes(&mut out, &f, &ticks(g.w_bounds.0, g.w_bounds.1), &ticks(g.h_bounds.0, g.h_bounds.1));
    for (k, &d) in result.d_list.iter().enumerate() {
        let stroke = PALETTE[k % PALETTE.len()];
        for c in curves.iter().filter(|c| c.d == d) {
            let grid_hull: Vec<Point> = c
                .hull
                .iter()
                .map(|&(w, h)| {
                    let (x, y) = g.to_grid_units(w, h);
                    Point::new(x, y)
                })
                .collect();
            let chain: Vec<(f64, f64)> = convex_hull(&grid_hull)
                .lower_left_chain()
                .iter()
                .map(|p| (g.w_bounds.0 + p.x * g.w_step(), g.h_bounds.0 + p.y * g.h_step()))
                .collect();
            let dash = if c.use_case == UseCase::AverageContact { r#" stroke-dasharray="6 4""# } else { "" };
            polyline(
                &mut out,
                &f,
                &chain,
                false,
                &format!(r#"stroke="{stroke}" stroke-width="2"{dash}"#),
                &format!(r#"class="curve" data-d="{}" data-use-case="{}""#, d.meters(), c.use_case.number()),
            );
        }
    }
    for use_case in [UseCase::NoContact, UseCase::AverageContact] {
        let (lo, hi) = SocialDistance::RULE_DOMAIN;
        let ends = [use_case.rule(SocialDistance(lo))?, use_case.rule(SocialDistance(hi))?];
        let line: Vec<(f64, f64)> = ends.iter().map(|r| (r.width, r.height)).collect();
        let dash = if use_case == UseCase::AverageContact { r#" stroke-dasharray="6 4""# } else { "" };
        polyline(
            &mut out,
            &f,
            &line,
            false,
            &format!(r#"stroke="black" stroke-width="1"{dash}"#),
            &format!(r#"class="rule" data-use-case="{}""#, use_case.number()),
        );
        for d in SocialDistance::STUDY {
            let r = use_case.rule(d)?;
            let _ = writeln!(
                out,
                r#"<circle class="marker" cx="{:.3}" cy="{:.3}" r="4" fill="black" data-use-case="{}" data-d="{}" data-w="{}" data-h="{}"/>"#,
                f.x(r.width),
                f.y(r.height),
                use_case.number(),
                d.meters(),
                r.width,
                r.height
            );
        }
    }
    for (k, d) in result.d_list.iter().enumerate() {
        let y = f.top + 15.0 + 18.0 * k as f64;
        let lx = f.left + f.width + 20.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">d = {} m</text>"#,
            lx + 20.0,
            PALETTE[k % PALETTE.len()],
            lx + 26.0,
            y + 4.0,
            d.meters()
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes one heatmap per distance plus the combined curve figure; returns
/// the written paths.
pub fn emit_plots(result: &SweepResult, curves: &[IndifferenceCurve], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let normalized = normalize(result)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut write = |name: String, body: String| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for (col, d) in result.d_list.iter().enumerate() {
        write(format!("heatmap_d{:.2}.svg", d.meters()), heatmap_svg(result, &normalized, col, curves))?;
    }
    write("indifference_curves.svg".into(), curves_svg(result, curves)?)?;
    Ok(written)
}
