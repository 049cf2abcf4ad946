//! Parameter sweeps over personal-space width `w` and potential height `h`.
//!
//! Every grid cell is an independent simulation seeded from the base seed and
//! the cell's grid indices, so results do not depend on how many workers run
//! the sweep or in which order cells finish. One trajectory serves every
//! social distance because `d` only enters the post-hoc contact threshold.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::engine::{scenario_hash, simulate, SimConfig};
use crate::error::{Error, Result};
use crate::metrics::{clogging, contact_ledger, DEFAULT_MEASURE_START, DEFAULT_STALL_WINDOW};
use crate::potential::SocialDistance;
use crate::scenario::{PopulationSpec, Topography};
use crate::seed::derive_seed;
use crate::trajectory::TrajectoryLog;

pub const DEFAULT_W_BOUNDS: (f64, f64) = (1.2, 5.0);
pub const DEFAULT_H_BOUNDS: (f64, f64) = (50.0, 1000.0);
/// The parameter pair whose contact times normalize the sweep.
pub const DEFAULT_CELL: (f64, f64) = (1.2, 50.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepGrid {
    pub w_bounds: (f64, f64),
    pub h_bounds: (f64, f64),
    pub n_w: usize,
    pub n_h: usize,
    /// Row-major: `w` varies fastest.
    #[serde(skip)]
    pub points: Vec<(f64, f64)>,
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index(&self, wi: usize, hi: usize) -> usize {
        hi * self.n_w + wi
    }

    /// `(wi, hi)` of cell `k`.
    pub fn indices(&self, k: usize) -> (usize, usize) {
        (k % self.n_w, k / self.n_w)
    }

    pub fn w_step(&self) -> f64 {
        (self.w_bounds.1 - self.w_bounds.0) / (self.n_w - 1) as f64
    }

    pub fn h_step(&self) -> f64 {
        (self.h_bounds.1 - self.h_bounds.0) / (self.n_h - 1) as f64
    }

    /// Continuous grid coordinates of `(w, h)`: cell `(wi, hi)` maps to `(wi, hi)`.
    pub fn to_grid_units(&self, w: f64, h: f64) -> (f64, f64) {
        (
            (w - self.w_bounds.0) / self.w_step(),
            (h - self.h_bounds.0) / self.h_step(),
        )
    }

    /// Index of the cell at `(w, h)`, if one lies within `1e-9` of it.
    pub fn find(&self, w: f64, h: f64) -> Option<usize> {
        self.points
            .iter()
            .position(|&(pw, ph)| (pw - w).abs() <= 1e-9 && (ph - h).abs() <= 1e-9)
    }
}

fn linspace(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    if k + 1 == n {
        hi
    } else {
        (lo * (n - 1 - k) as f64 + hi * k as f64) / (n - 1) as f64
    }
}

pub fn make_grid(n_w: usize, n_h: usize, w_bounds: (f64, f64), h_bounds: (f64, f64)) -> Result<SweepGrid> {
    if n_w < 2 || n_h < 2 {
        return Err(Error::DegenerateBounds(format!(
            "need at least 2 values per axis, got {n_w}x{n_h}"
        )));
    }
    for (name, (lo, hi)) in [("w", w_bounds), ("h", h_bounds)] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::DegenerateBounds(format!("{name} bounds [{lo}, {hi}]")));
        }
    }
    let points = (0..n_h)
        .flat_map(|hi| {
            (0..n_w).map(move |wi| {
                (
                    linspace(w_bounds.0, w_bounds.1, n_w, wi),
                    linspace(h_bounds.0, h_bounds.1, n_h, hi),
                )
            })
        })
        .collect();
    Ok(SweepGrid {
        w_bounds,
        h_bounds,
        n_w,
        n_h,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SweepConfig {
    pub d_list: Vec<SocialDistance>,
    pub base_seed: u64,
    pub repetitions: usize,
    pub measure_start: f64,
    pub stall_window: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            d_list: SocialDistance::STUDY.to_vec(),
            base_seed: 0,
            repetitions: 1,
            measure_start: DEFAULT_MEASURE_START,
            stall_window: DEFAULT_STALL_WINDOW,
        }
    }
}

impl SweepConfig {
    /// Seed of repetition `rep` of cell `(wi, hi)`; repetitions stride by one.
    pub fn cell_seed(&self, wi: usize, hi: usize, rep: usize) -> u64 {
        derive_seed(self.base_seed, &[wi as u64, hi as u64]).wrapping_add(rep as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub w: f64,
    pub h: f64,
    pub status: CellStatus,
    /// Time the last agent reached the target; `None` if some never did.
    pub evac_time: Option<f64>,
    pub clogged: bool,
    /// One value per entry of the sweep's `d_list`.
    pub t_m: Vec<f64>,
}

impl CellResult {
    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }

    fn failed(w: f64, h: f64, message: String) -> Self {
        CellResult {
            w,
            h,
            status: CellStatus::Failed(message),
            evac_time: None,
            clogged: false,
            t_m: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub d_list: Vec<SocialDistance>,
    /// In grid order.
    pub cells: Vec<CellResult>,
}

/// Runs `base` with `(w, h)` substituted and summarizes the trajectory.
pub fn run_cell(
    topo: &Topography,
    pop: &PopulationSpec,
    base: &SimConfig,
    sweep: &SweepConfig,
    (w, h): (f64, f64),
    (wi, hi): (usize, usize),
    inspect: &(dyn Fn(&TrajectoryLog) + Sync),
) -> CellResult {
    let reps = sweep.repetitions.max(1);
    let mut t_m = vec![0.0; sweep.d_list.len()];
    let mut evac = Some(0.0);
    let mut clogged = false;
    for rep in 0..reps {
        let mut cfg = base.clone();
        cfg.potential = cfg.potential.with_personal_space(w, h);
        cfg.seed = sweep.cell_seed(wi, hi, rep);
        let log = match simulate(topo, pop, &cfg) {
            Ok(log) => log,
            Err(e) => return CellResult::failed(w, h, e.to_string()),
        };
        inspect(&log);
        for (acc, &d) in t_m.iter_mut().zip(&sweep.d_list) {
            match contact_ledger(&log, d, sweep.measure_start) {
                Ok(ledger) => *acc += ledger.t_m / reps as f64,
                Err(e) => return CellResult::failed(w, h, e.to_string()),
            }
        }
        clogged |= clogging(&log, topo, sweep.stall_window).clogged;
        evac = match (evac, log.remaining(), log.end_time()) {
            (Some(acc), 0, Some(end)) => Some(acc + end / reps as f64),
            _ => None,
        };
    }
    CellResult {
        w,
        h,
        status: CellStatus::Ok,
        evac_time: evac,
        clogged,
        t_m,
    }
}

/// Runs every cell of `grid` on `jobs` workers. Cells already present (and
/// successful) in `resume` are kept as they are.
pub fn run_sweep(
    topo: &Topography,
    pop: &PopulationSpec,
    base: &SimConfig,
    grid: &SweepGrid,
    sweep: &SweepConfig,
    jobs: usize,
    resume: Option<&SweepResult>,
) -> Result<SweepResult> {
    run_sweep_inspect(topo, pop, base, grid, sweep, jobs, resume, &|_| {})
}

/// As [`run_sweep`], handing every produced trajectory to `inspect`.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep_inspect(
    topo: &Topography,
    pop: &PopulationSpec,
    base: &SimConfig,
    grid: &SweepGrid,
    sweep: &SweepConfig,
    jobs: usize,
    resume: Option<&SweepResult>,
    inspect: &(dyn Fn(&TrajectoryLog) + Sync),
) -> Result<SweepResult> {
    run_sweep_observed(topo, pop, base, grid, sweep, jobs, resume, inspect, &|_, _| {})
}

/// As [`run_sweep_inspect`], also calling `on_cell` with the grid index and
/// result of every newly computed cell as soon as it finishes.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep_observed(
    topo: &Topography,
    pop: &PopulationSpec,
    base: &SimConfig,
    grid: &SweepGrid,
    sweep: &SweepConfig,
    jobs: usize,
    resume: Option<&SweepResult>,
    inspect: &(dyn Fn(&TrajectoryLog) + Sync),
    on_cell: &(dyn Fn(usize, &CellResult) + Sync),
) -> Result<SweepResult> {
    base.validate()?;
    if sweep.d_list.is_empty() {
        return Err(Error::Config("no social distances requested".into()));
    }
    let mut slots: Vec<Option<CellResult>> = vec![None; grid.len()];
    if let Some(prev) = resume {
        if prev.grid.points != grid.points || prev.d_list != sweep.d_list {
            return Err(Error::Config(
                "existing result was produced for a different grid or distance list".into(),
            ));
        }
        for (slot, cell) in slots.iter_mut().zip(&prev.cells) {
            if cell.is_ok() {
                *slot = Some(cell.clone());
            }
        }
    }
    let todo: Vec<usize> = (0..grid.len()).filter(|&k| slots[k].is_none()).collect();
    let next = AtomicUsize::new(0);
    let slots = Mutex::new(slots);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(todo.len().max(1)) {
            s.spawn(|| loop {
                let n = next.fetch_add(1, Ordering::Relaxed);
                let Some(&k) = todo.get(n) else { break };
                let cell = run_cell(topo, pop, base, sweep, grid.points[k], grid.indices(k), inspect);
                on_cell(k, &cell);
                slots.lock().expect("no worker panicked")[k] = Some(cell);
            });
        }
    });
    let cells = slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|c| c.expect("every cell ran"))
        .collect();
    Ok(SweepResult {
        grid: grid.clone(),
        d_list: sweep.d_list.clone(),
        cells,
    })
}

/// Header label of the contact-time column for `d`.
pub fn column_name(d: SocialDistance) -> String {
    format!("tm_{:.2}", d.meters())
}

impl SweepResult {
    pub fn column(&self, d: SocialDistance) -> Result<usize> {
        self.d_list
            .iter()
            .position(|x| (x.meters() - d.meters()).abs() < 1e-9)
            .ok_or_else(|| Error::MissingColumn(column_name(d)))
    }

    pub fn failed_count(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_ok()).count()
    }

    /// Contact times of the `(1.2, 50)` cell, one per distance.
    pub fn defaults(&self) -> Option<&[f64]> {
        let k = self.grid.find(DEFAULT_CELL.0, DEFAULT_CELL.1)?;
        let cell = &self.cells[k];
        cell.is_ok().then_some(cell.t_m.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = csv_header(&self.d_list);
        for c in &self.cells {
            out.push_str(&csv_row(c, self.d_list.len()));
        }
        out
    }

    /// Parses a result table. The grid is recovered from the distinct `w`
    /// and `h` values, which must form a complete lattice. Rows may come in
    /// any order.
    pub fn from_csv(text: &str) -> Result<SweepResult> {
        let bad = |m: String| Error::Parse(format!("sweep table: {m}"));
        let (d_list, mut cells) = parse_rows(text)?;
        cells.sort_by(|a, b| a.h.total_cmp(&b.h).then(a.w.total_cmp(&b.w)));
        let mut ws: Vec<f64> = cells.iter().map(|c| c.w).collect();
        let mut hs: Vec<f64> = cells.iter().map(|c| c.h).collect();
        for v in [&mut ws, &mut hs] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        if ws.len() < 2 || hs.len() < 2 {
            return Err(bad("fewer than two distinct values on an axis".into()));
        }
        let grid = make_grid(ws.len(), hs.len(), (ws[0], ws[ws.len() - 1]), (hs[0], hs[hs.len() - 1]))?;
        if grid.len() != cells.len() {
            return Err(bad(format!("{} rows do not form a {}x{} grid", cells.len(), ws.len(), hs.len())));
        }
        for (k, c) in cells.iter().enumerate() {
            let (gw, gh) = grid.points[k];
            // tolerate the last digit lost when the lattice is re-derived
            if (gw - c.w).abs() > 1e-9 * gw.abs().max(1.0) || (gh - c.h).abs() > 1e-9 * gh.abs().max(1.0) {
                return Err(bad(format!("row at ({}, {}) is off the grid", c.w, c.h)));
            }
        }
        let mut grid = grid;
        grid.points = cells.iter().map(|c| (c.w, c.h)).collect();
        Ok(SweepResult { grid, d_list, cells })
    }

    /// Parses a possibly partial table produced for `grid`. Cells without a
    /// row come back as failed with status message `"missing"`; a later row
    /// for the same cell replaces an earlier one.
    pub fn from_csv_on_grid(text: &str, grid: &SweepGrid) -> Result<SweepResult> {
        // a row cut short by an interruption is dropped
        let text = match text.rfind('\n') {
            Some(end) if end + 1 < text.len() => &text[..=end],
            _ => text,
        };
        let (d_list, rows) = parse_rows(text)?;
        let mut cells: Vec<CellResult> = grid
            .points
            .iter()
            .map(|&(w, h)| CellResult::failed(w, h, "missing".into()))
            .collect();
        for row in rows {
            let k = grid.find(row.w, row.h).ok_or_else(|| {
                Error::Parse(format!("sweep table: row at ({}, {}) is off the grid", row.w, row.h))
            })?;
            cells[k] = row;
        }
        Ok(SweepResult {
            grid: grid.clone(),
            d_list,
            cells,
        })
    }
}

/// Header line of a result table, newline included.
pub fn csv_header(d_list: &[SocialDistance]) -> String {
    let mut out = String::from("w,h,status,evac_time,clogged");
    for &d in d_list {
        out.push(',');
        out.push_str(&column_name(d));
    }
    out.push('\n');
    out
}

/// One result-table row, newline included.
pub fn csv_row(c: &CellResult, columns: usize) -> String {
    let status = match c.status {
        CellStatus::Ok => "ok",
        CellStatus::Failed(_) => "failed",
    };
    let evac = c.evac_time.map(|t| t.to_string()).unwrap_or_default();
    let mut out = format!("{},{},{status},{evac},{}", c.w, c.h, c.clogged);
    for k in 0..columns {
        out.push(',');
        if let Some(v) = c.t_m.get(k) {
            out.push_str(&v.to_string());
        }
    }
    out.push('\n');
    out
}

fn parse_rows(text: &str) -> Result<(Vec<SocialDistance>, Vec<CellResult>)> {
    let bad = |m: String| Error::Parse(format!("sweep table: {m}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty file".into()))?.split(',').collect();
    let fixed = ["w", "h", "status", "evac_time", "clogged"];
    for (k, name) in fixed.iter().enumerate() {
        if header.get(k) != Some(name) {
            return Err(Error::MissingColumn((*name).to_string()));
        }
    }
    let d_list = header[fixed.len()..]
        .iter()
        .map(|col| {
            col.strip_prefix("tm_")
                .and_then(|v| v.parse::<f64>().ok())
                .map(SocialDistance)
                .ok_or_else(|| bad(format!("unexpected column {col:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let num = |s: &str, row: usize| s.parse::<f64>().map_err(|_| bad(format!("row {row}: bad number {s:?}")));
    let mut cells = Vec::new();
    for (row, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != header.len() {
            return Err(bad(format!("row {row} has {} fields, expected {}", f.len(), header.len())));
        }
        let (w, h) = (num(f[0], row)?, num(f[1], row)?);
        let status = match f[2] {
            "ok" => CellStatus::Ok,
            "failed" => CellStatus::Failed(String::new()),
            s => return Err(bad(format!("row {row}: unknown status {s:?}"))),
        };
        let evac_time = if f[3].is_empty() { None } else { Some(num(f[3], row)?) };
        let clogged = f[4] == "true";
        let t_m = if status == CellStatus::Ok {
            f[5..].iter().map(|s| num(s, row)).collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        cells.push(CellResult {
            w,
            h,
            status,
            evac_time,
            clogged,
            t_m,
        });
    }
    cells.sort_by(|a, b| a.h.total_cmp(&b.h).then(a.w.total_cmp(&b.w)));
    Ok((d_list, cells))
}

/// `t_m / t_m0` per cell (outer) and distance (inner); failed cells are `None`.
pub fn normalize(result: &SweepResult) -> Result<Vec<Option<Vec<f64>>>> {
    let defaults = result
        .defaults()
        .ok_or_else(|| Error::Config("sweep has no successful (1.2, 50) default cell".into()))?;
    for (&d, &t0) in result.d_list.iter().zip(defaults) {
        if !(t0 > 0.0) {
            return Err(Error::ZeroDefault(d.meters()));
        }
    }
    Ok(result
        .cells
        .iter()
        .map(|c| {
            c.is_ok()
                .then(|| c.t_m.iter().zip(defaults).map(|(v, t0)| v / t0).collect())
        })
        .collect())
}

/// Descriptor written next to a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Sidecar {
    pub grid: SweepGrid,
    pub scenario_hash: String,
    pub base_seed: u64,
    pub repetitions: usize,
    pub seed_policy: String,
    pub d_list: Vec<SocialDistance>,
    pub tool_version: String,
}

impl Sidecar {
    pub fn new(
        topo: &Topography,
        pop: &PopulationSpec,
        base: &SimConfig,
        grid: &SweepGrid,
        sweep: &SweepConfig,
    ) -> Self {
        Sidecar {
            grid: grid.clone(),
            scenario_hash: scenario_hash(topo, pop, base),
            base_seed: sweep.base_seed,
            repetitions: sweep.repetitions,
            seed_policy: "splitmix64(base, w index, h index) + repetition".into(),
            d_list: sweep.d_list.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Spearman rank correlation with average ranks for ties; `None` when either
/// series is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        while end + 1 < order.len() && v[order[end + 1]] == v[order[k]] {
            end += 1;
        }
        let rank = (k + end) as f64 / 2.0 + 1.0;
        for &i in &order[k..=end] {
            out[i] = rank;
        }
        k = end + 1;
    }
    out
}
