//! The `osm` command line: single runs, sweeps, analysis and rule
//! verification.
//!
//! Settings are layered: built-in defaults, then an optional JSON run config
//! (`--config`), then flags. Every stochastic choice derives from `--seed`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::Value;

use crate::analysis::{curves_csv, emit_plots, indifference_curve, verify_rule, Band, UseCase};
use crate::engine::{simulate, FloorFieldMode, SimConfig};
use crate::error::{Error, Result};
use crate::floorfield::FloorField;
use crate::metrics::{clogging, contact_ledger, mean_distance_where, Congestion, DEFAULT_MEASURE_START, DEFAULT_STALL_WINDOW};
use crate::potential::SocialDistance;
use crate::scenario::{bottleneck_scenario, load_scenario, scenario_to_json, PopulationSpec, Topography};
use crate::sweep::{
    csv_header, csv_row, make_grid, run_sweep_observed, CellResult, CellStatus, Sidecar, SweepConfig, SweepGrid,
    SweepResult, DEFAULT_H_BOUNDS, DEFAULT_W_BOUNDS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SIMULATION: i32 = 2;
pub const EXIT_CELL_FAILED: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, Parser)]
#[command(name = "osm", version, about = "Optimal Steps Model crowd simulator with social-distancing calibration")]
#[command(after_help = "Exit codes: 0 ok, 1 invalid input or configuration, 2 simulation failure, \
3 some sweep cells failed, 4 verification failed.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and report contact times.
    Run(RunArgs),
    /// Simulate every cell of a (w, h) grid.
    Sweep(SweepArgs),
    /// Derive indifference curves, verdicts and plots from a sweep table.
    Analyze(AnalyzeArgs),
    /// Check rule-of-thumb parameters against a sweep table.
    Verify(VerifyArgs),
    /// Scenario utilities.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCommand {
    /// Print (or write) a built-in scenario as JSON.
    EmitBuiltin {
        /// Built-in scenario name.
        #[arg(default_value = "bottleneck")]
        name: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FloorFieldArg {
    Static,
    Dynamic,
}

impl From<FloorFieldArg> for FloorFieldMode {
    fn from(f: FloorFieldArg) -> Self {
        match f {
            FloorFieldArg::Static => FloorFieldMode::Static,
            FloorFieldArg::Dynamic => FloorFieldMode::Dynamic,
        }
    }
}

/// Options shared by `run` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Scenario JSON file or `builtin:bottleneck` [default: builtin:bottleneck].
    #[arg(long)]
    pub scenario: Option<String>,
    /// JSON run config with `scenario`, `potential`, `sim`, `distances`,
    /// `measureStart` and `output` keys, all optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Simulated time limit (s).
    #[arg(long, value_name = "SECONDS")]
    pub max_time: Option<f64>,
    /// Floor field kind.
    #[arg(long, value_enum)]
    pub floor_field: Option<FloorFieldArg>,
    /// Let blocked agents swap places with counter-flowing neighbors.
    #[arg(long)]
    pub swap: bool,
    /// Number of agents spawned (overrides the scenario).
    #[arg(long, value_name = "COUNT")]
    pub agents: Option<usize>,
    /// Start of the contact measurement window (s).
    #[arg(long, value_name = "SECONDS")]
    pub measure_start: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Personal space width w (m).
    #[arg(long, value_name = "METERS")]
    pub w: Option<f64>,
    /// Potential height h (utility units).
    #[arg(long, value_name = "UTILITY")]
    pub h: Option<f64>,
    /// Social distance d (m); repeatable [default: 1.25 1.5 1.75 2.0 2.25].
    #[arg(long, value_name = "METERS")]
    pub d: Vec<f64>,
    /// Run seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: osm-run].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the initial floor field as `floorfield.csv` (x, y in m; value in s).
    #[arg(long)]
    pub dump_floor_field: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Grid resolution as NWxNH.
    #[arg(long, default_value = "100x100")]
    pub grid: GridSpec,
    /// Worker threads.
    #[arg(long, env = "OSM_JOBS", default_value_t = 1)]
    pub jobs: usize,
    /// Base seed; cell seeds derive from it and the cell's grid indices.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stochastic repetitions averaged per cell.
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    /// Smallest personal space width (m).
    #[arg(long, value_name = "METERS", default_value_t = DEFAULT_W_BOUNDS.0)]
    pub w_min: f64,
    /// Largest personal space width (m).
    #[arg(long, value_name = "METERS", default_value_t = DEFAULT_W_BOUNDS.1)]
    pub w_max: f64,
    /// Smallest potential height (utility units).
    #[arg(long, value_name = "UTILITY", default_value_t = DEFAULT_H_BOUNDS.0)]
    pub h_min: f64,
    /// Largest potential height (utility units).
    #[arg(long, value_name = "UTILITY", default_value_t = DEFAULT_H_BOUNDS.1)]
    pub h_max: f64,
    /// Result table; the sidecar JSON is written next to it. An existing
    /// table is resumed.
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n_w: usize,
    pub n_h: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected NWxNH, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
        Ok(GridSpec {
            n_w: parse(a)?,
            n_h: parse(b)?,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct BandArgs {
    /// Target average contact time t* of use case 2 (s).
    #[arg(long, value_name = "SECONDS", default_value_t = crate::analysis::DEFAULT_LEVEL)]
    pub target: f64,
    /// Half-width of the use-case-2 band around the target (s).
    #[arg(long, value_name = "SECONDS", default_value_t = crate::analysis::DEFAULT_LEVEL_TOLERANCE)]
    pub tol: f64,
}

impl BandArgs {
    fn band(&self) -> Band {
        Band {
            level: self.target,
            tolerance: self.tol,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Sweep result table.
    #[arg(long)]
    pub result: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "analysis")]
    pub out: PathBuf,
    #[command(flatten)]
    pub band: BandArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Use case: 1 (no contact) or 2 (average contact); repeatable.
    #[arg(long = "use-case", required = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub use_case: Vec<u8>,
    /// Social distance d (m); repeatable.
    #[arg(long, value_name = "METERS", required = true)]
    pub d: Vec<f64>,
    /// Sweep result table.
    #[arg(long)]
    pub result: PathBuf,
    #[command(flatten)]
    pub band: BandArgs,
    /// Also write the verdicts as a JSON array.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Contents of a `--config` file. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<String>,
    /// Overrides on top of `sim.potential`.
    pub potential: Option<Value>,
    pub sim: Option<Value>,
    pub distances: Option<Vec<f64>>,
    pub measure_start: Option<f64>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully layered settings of a run or sweep.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub topo: Topography,
    pub pop: PopulationSpec,
    pub cfg: SimConfig,
    pub distances: Vec<SocialDistance>,
    pub measure_start: f64,
    pub output: Option<PathBuf>,
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Loads `builtin:<name>` or a scenario JSON file.
pub fn load_scenario_arg(source: &str) -> Result<(Topography, PopulationSpec)> {
    match source.strip_prefix(BUILTIN_PREFIX) {
        Some("bottleneck") => Ok(bottleneck_scenario()),
        Some(other) => Err(Error::Config(format!("unknown built-in scenario {other:?}"))),
        None => load_scenario(Path::new(source)),
    }
}

/// Applies defaults, the config file and then the flags.
pub fn resolve(args: &SimArgs) -> Result<Resolved> {
    let file = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut cfg = serde_json::to_value(SimConfig::default()).expect("config serializes");
    if let Some(sim) = &file.sim {
        merge(&mut cfg, sim);
    }
    if let Some(pot) = &file.potential {
        merge(&mut cfg["potential"], pot);
    }
    let mut cfg: SimConfig = serde_json::from_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(t) = args.max_time {
        cfg.max_time = t;
    }
    if let Some(f) = args.floor_field {
        cfg.floor_field_mode = f.into();
    }
    if args.swap {
        cfg.enable_swap = true;
    }
    let source = args
        .scenario
        .clone()
        .or(file.scenario)
        .unwrap_or_else(|| format!("{BUILTIN_PREFIX}bottleneck"));
    let (topo, mut pop) = load_scenario_arg(&source)?;
    if let Some(n) = args.agents {
        pop.count = n;
    }
    let distances = file
        .distances
        .map(|v| v.into_iter().map(SocialDistance).collect())
        .unwrap_or_else(|| SocialDistance::STUDY.to_vec());
    Ok(Resolved {
        topo,
        pop,
        cfg,
        distances,
        measure_start: args.measure_start.or(file.measure_start).unwrap_or(DEFAULT_MEASURE_START),
        output: file.output,
    })
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Scenario(ScenarioCommand::EmitBuiltin { name, out }) => cmd_emit_builtin(&name, out.as_deref()),
    }
}

fn fail(code: i32, e: impl std::fmt::Display) -> i32 {
    eprintln!("osm: {e}");
    code
}

fn write_file(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    let mut r = match resolve(&args.sim) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if !args.d.is_empty() {
        r.distances = args.d.iter().copied().map(SocialDistance).collect();
    }
    let p = &mut r.cfg.potential;
    *p = p.with_personal_space(args.w.unwrap_or(p.personal_space_width), args.h.unwrap_or(p.height));
    if let Some(seed) = args.seed {
        r.cfg.seed = seed;
    }
    if let Err(e) = r.cfg.validate() {
        return fail(EXIT_CONFIG, e);
    }
    let out = args.out.clone().or(r.output.clone()).unwrap_or_else(|| PathBuf::from("osm-run"));
    if let Err(e) = ensure_dir(&out) {
        return fail(EXIT_CONFIG, e);
    }
    if args.dump_floor_field {
        let ff = FloorField::build_static(&r.topo, r.cfg.floor_field_spacing, r.pop.torso_radius);
        if let Err(e) = ff.and_then(|ff| write_file(&out.join("floorfield.csv"), ff.to_csv())) {
            return fail(EXIT_SIMULATION, e);
        }
    }
    let log = match simulate(&r.topo, &r.pop, &r.cfg) {
        Ok(log) => log,
        Err(e) => return fail(EXIT_SIMULATION, e),
    };
    match write_run_outputs(&r, &log, &out) {
        Ok(lines) => {
            print!("{lines}");
            EXIT_OK
        }
        Err(e @ Error::Io { .. }) => fail(EXIT_CONFIG, e),
        Err(e) => fail(EXIT_SIMULATION, e),
    }
}

fn write_run_outputs(r: &Resolved, log: &crate::trajectory::TrajectoryLog, out: &Path) -> Result<String> {
    write_file(&out.join("trajectory.csv"), log.to_csv())?;
    let mut summary = String::from("d,t_m,n,episodes\n");
    let mut stdout = String::new();
    for &d in &r.distances {
        let ledger = contact_ledger(log, d, r.measure_start)?;
        write_file(&out.join(format!("contacts_d{:.2}.csv", d.meters())), ledger.episodes_csv())?;
        let _ = writeln!(summary, "{}", ledger.summary_line());
        let _ = writeln!(stdout, "d={:?} t_m={:.3}s", d.meters(), ledger.t_m);
    }
    write_file(&out.join("summary.csv"), summary)?;
    let report = clogging(log, &r.topo, DEFAULT_STALL_WINDOW);
    let congestion = Congestion::bottleneck();
    let x_m = mean_distance_where(log, r.measure_start, |f| congestion.holds(f)).ok();
    let doc = serde_json::json!({
        "clogging": report,
        "remaining": log.remaining(),
        "endTime": log.end_time(),
        "meanDistanceCongested": x_m,
        "scenarioHash": log.scenario_hash,
    });
    write_file(
        &out.join("clogging.json"),
        serde_json::to_string_pretty(&doc).expect("report serializes"),
    )?;
    Ok(stdout)
}

/// Sidecar path for a result table: same stem, `.json` extension.
pub fn sidecar_path(table: &Path) -> PathBuf {
    table.with_extension("json")
}

pub fn cmd_sweep(args: &SweepArgs) -> i32 {
    let r = match resolve(&args.sim) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let grid = match make_grid(args.grid.n_w, args.grid.n_h, (args.w_min, args.w_max), (args.h_min, args.h_max)) {
        Ok(g) => g,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let sweep = SweepConfig {
        d_list: r.distances.clone(),
        base_seed: args.seed,
        repetitions: args.repetitions,
        measure_start: r.measure_start,
        stall_window: DEFAULT_STALL_WINDOW,
    };
    let sidecar = Sidecar::new(&r.topo, &r.pop, &r.cfg, &grid, &sweep);
    let side_path = sidecar_path(&args.out);
    let previous = match load_resume(&args.out, &side_path, &sidecar, &grid) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Some(prev) = &previous {
        let done = prev.cells.iter().filter(|c| c.is_ok()).count();
        eprintln!("osm: resuming {}: {done} of {} cells done", args.out.display(), prev.cells.len());
    }
    let journal = match start_journal(&args.out, &side_path, &sidecar, previous.as_ref()) {
        Ok(f) => Mutex::new(f),
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let columns = sweep.d_list.len();
    let on_cell = |_: usize, cell: &CellResult| {
        let mut f = journal.lock().expect("journal writer panicked");
        // a lost progress row only costs recomputation on resume
        let _ = f.write_all(csv_row(cell, columns).as_bytes()).and_then(|_| f.flush());
    };
    let result = run_sweep_observed(
        &r.topo,
        &r.pop,
        &r.cfg,
        &grid,
        &sweep,
        args.jobs,
        previous.as_ref(),
        &|_| {},
        &on_cell,
    );
    drop(journal);
    let result = match result {
        Ok(res) => res,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Err(e) = write_file(&args.out, result.to_csv()) {
        return fail(EXIT_CONFIG, e);
    }
    let failed = result.failed_count();
    println!("{} cells, {failed} failed -> {}", result.cells.len(), args.out.display());
    if failed > 0 {
        for c in result.cells.iter().filter(|c| !c.is_ok()) {
            if let CellStatus::Failed(msg) = &c.status {
                eprintln!("osm: cell (w={}, h={}) failed: {msg}", c.w, c.h);
            }
        }
        return EXIT_CELL_FAILED;
    }
    EXIT_OK
}

/// Reads an existing table for resumption; its sidecar must describe the
/// same scenario, grid, seeds and distances.
fn load_resume(table: &Path, side_path: &Path, expected: &Sidecar, grid: &SweepGrid) -> Result<Option<SweepResult>> {
    if !table.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(side_path).map_err(|e| Error::io(side_path, e))?;
    let found: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", side_path.display())))?;
    let same = found.scenario_hash == expected.scenario_hash
        && found.base_seed == expected.base_seed
        && found.repetitions == expected.repetitions
        && found.d_list == expected.d_list
        && (found.grid.n_w, found.grid.n_h, found.grid.w_bounds, found.grid.h_bounds)
            == (expected.grid.n_w, expected.grid.n_h, expected.grid.w_bounds, expected.grid.h_bounds);
    if !same {
        return Err(Error::Config(format!(
            "{} was produced with different settings; remove it or choose another --out",
            table.display()
        )));
    }
    let text = fs::read_to_string(table).map_err(|e| Error::io(table, e))?;
    SweepResult::from_csv_on_grid(&text, grid).map(Some)
}

/// Writes the sidecar and a table holding the header plus every finished
/// cell of `previous`; returns the table opened for appending.
fn start_journal(table: &Path, side_path: &Path, sidecar: &Sidecar, previous: Option<&SweepResult>) -> Result<fs::File> {
    write_file(side_path, serde_json::to_string_pretty(sidecar).expect("sidecar serializes"))?;
    let mut text = csv_header(&sidecar.d_list);
    for c in previous.iter().flat_map(|p| &p.cells).filter(|c| c.is_ok()) {
        text.push_str(&csv_row(c, sidecar.d_list.len()));
    }
    write_file(table, text)?;
    fs::OpenOptions::new().append(true).open(table).map_err(|e| Error::io(table, e))
}

fn load_result(path: &Path) -> Result<SweepResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SweepResult::from_csv(&text)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> i32 {
    match analyze(args) {
        Ok(()) => EXIT_OK,
        Err(e) => fail(EXIT_CONFIG, e),
    }
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let result = load_result(&args.result)?;
    let band = args.band.band();
    ensure_dir(&args.out)?;
    let mut curves = Vec::new();
    let mut verdicts = Vec::new();
    for &d in &result.d_list {
        for use_case in [UseCase::NoContact, UseCase::AverageContact] {
            let curve = indifference_curve(&result, d, use_case, band)?;
            if curve.member_cells.is_empty() {
                eprintln!("osm: warning: uc{} d={:?}: no qualifying cells", use_case.number(), d.meters());
            }
            curves.push(curve);
            match verify_rule(&result, d, use_case, band) {
                Ok(v) => verdicts.push(v),
                Err(Error::Domain(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    write_file(&args.out.join("curves.csv"), curves_csv(&curves))?;
    write_file(
        &args.out.join("verdicts.json"),
        serde_json::to_string_pretty(&verdicts).expect("verdicts serialize"),
    )?;
    let plots = emit_plots(&result, &curves, &args.out)?;
    for v in &verdicts {
        println!("{}", v.line());
    }
    println!("{} curves, {} plots -> {}", curves.len(), plots.len(), args.out.display());
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs) -> i32 {
    let result = match load_result(&args.result) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let mut verdicts = Vec::new();
    for &uc in &args.use_case {
        let use_case = UseCase::try_from(uc).expect("range-checked by the parser");
        for &d in &args.d {
            match verify_rule(&result, SocialDistance(d), use_case, args.band.band()) {
                Ok(v) => {
                    println!("{}", v.line());
                    if let Some(w) = &v.inconclusive {
                        eprintln!("osm: warning: {w}");
                    }
                    verdicts.push(v);
                }
                Err(e) => return fail(EXIT_CONFIG, e),
            }
        }
    }
    if let Some(path) = &args.json {
        if let Err(e) = write_file(path, serde_json::to_string_pretty(&verdicts).expect("verdicts serialize")) {
            return fail(EXIT_CONFIG, e);
        }
    }
    if verdicts.iter().all(|v| v.pass) {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

fn cmd_emit_builtin(name: &str, out: Option<&Path>) -> i32 {
    let (topo, pop) = match load_scenario_arg(&format!("{BUILTIN_PREFIX}{name}")) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let json = scenario_to_json(&topo, &pop);
    match out {
        Some(path) => match write_file(path, json) {
            Ok(()) => EXIT_OK,
            Err(e) => fail(EXIT_CONFIG, e),
        },
        None => {
            let _ = writeln!(std::io::stdout(), "{json}");
            EXIT_OK
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_spec_parses() {
        assert_eq!("10x12".parse::<GridSpec>(), Ok(GridSpec { n_w: 10, n_h: 12 }));
        assert!("10".parse::<GridSpec>().is_err());
        assert!("ax3".parse::<GridSpec>().is_err());
    }

    #[test]
    fn every_flag_is_documented() {
        let mut cmd = Cli::command();
        for sub in cmd.get_subcommands_mut() {
            for arg in sub.get_arguments() {
                if arg.get_id() == "help" || arg.get_id() == "version" {
                    continue;
                }
                assert!(arg.get_help().is_some(), "{} --{} lacks help", sub.get_name(), arg.get_id());
            }
        }
    }

    fn sim_args() -> SimArgs {
        SimArgs {
            scenario: None,
            config: None,
            max_time: None,
            floor_field: None,
            swap: false,
            agents: None,
            measure_start: None,
        }
    }

    #[test]
    fn flags_override_config_file_over_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(
            &path,
            r#"{"sim": {"maxTime": 42, "potential": {"height": 70}}, "potential": {"personalSpaceWidth": 2.0}, "measureStart": 5}"#,
        )
        .unwrap();
        let mut args = sim_args();
        args.config = Some(path);
        let r = resolve(&args).unwrap();
        assert_eq!(r.cfg.max_time, 42.0);
        assert_eq!(r.cfg.potential.height, 70.0);
        assert_eq!(r.cfg.potential.personal_space_width, 2.0);
        assert_eq!(r.cfg.potential.intimate_space_width, 0.45);
        assert_eq!(r.measure_start, 5.0);
        args.max_time = Some(7.0);
        args.measure_start = Some(1.0);
        let r = resolve(&args).unwrap();
        assert_eq!((r.cfg.max_time, r.measure_start), (7.0, 1.0));
    }

    #[test]
    fn config_file_is_type_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let mut args = sim_args();
        args.config = Some(path.clone());
        fs::write(&path, r#"{"sim": {"maxTime": "long"}}"#).unwrap();
        assert!(matches!(resolve(&args), Err(Error::Config(_))));
        fs::write(&path, r#"{"simulation": {}}"#).unwrap();
        assert!(matches!(resolve(&args), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_builtin_is_rejected() {
        assert!(load_scenario_arg("builtin:stadium").is_err());
        assert!(load_scenario_arg("builtin:bottleneck").is_ok());
    }
}
