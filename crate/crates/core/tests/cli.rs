use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use osm_core::potential::SocialDistance;
use osm_core::scenario::{bottleneck_scenario, scenario_from_json};
use osm_core::sweep::{make_grid, CellResult, CellStatus, SweepResult, DEFAULT_H_BOUNDS, DEFAULT_W_BOUNDS};

fn osm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osm"))
        .args(args)
        .current_dir(cwd)
        .env_remove("OSM_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: [&str; 4] = ["--agents", "12", "--max-time", "60"];

#[test]
fn use_case_one_point_has_no_contact() {
    let dir = tempfile::tempdir().unwrap();
    let o = osm(&["run", "--w", "2.625", "--h", "550", "--d", "1.5", "--seed", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "d=1.5 t_m=0.000s\n");
}

#[test]
fn default_parameters_produce_contact() {
    let dir = tempfile::tempdir().unwrap();
    let o = osm(&["run", "--w", "1.2", "--h", "50", "--d", "1.5", "--seed", "7", "--out", "r"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    let value: f64 = line.trim().strip_prefix("d=1.5 t_m=").unwrap().strip_suffix('s').unwrap().parse().unwrap();
    assert!(value > 0.0, "{line}");
    for f in ["trajectory.csv", "summary.csv", "contacts_d1.50.csv", "clogging.json"] {
        assert!(dir.path().join("r").join(f).exists(), "{f}");
    }
}

#[test]
fn run_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let mut args = vec!["run", "--seed", "3", "--out", out, "--dump-floor-field"];
        args.extend(SMALL);
        let o = osm(&args, dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o).lines().count(), 5);
    }
    for f in ["trajectory.csv", "summary.csv", "clogging.json", "floorfield.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn config_file_layers_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"sim": {"maxTime": 30}, "potential": {"height": 80}, "distances": [2.0], "output": "from-config"}"#,
    )
    .unwrap();
    let o = osm(&["run", "--config", "run.json", "--agents", "8"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("d=2.0 t_m="));
    let traj = fs::read_to_string(dir.path().join("from-config/trajectory.csv")).unwrap();
    let last: f64 = traj.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(last <= 30.0);
    let o = osm(&["run", "--config", "run.json", "--agents", "8", "--max-time", "10", "--out", "flag"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let traj = fs::read_to_string(dir.path().join("flag/trajectory.csv")).unwrap();
    let last: f64 = traj.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(last <= 10.0);
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = osm(&["run", "--scenario", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.json"));
    let o = osm(&["run", "--max-time", "-5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = osm(&["run", "--w", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(1), "w below the intimate width is invalid");
    let o = osm(&["sweep", "--grid", "1x5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = osm(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn overfull_source_is_a_simulation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = osm(&["run", "--agents", "500"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("could not place"));
}

#[test]
fn sweep_writes_table_and_sidecar_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--grid", "3x3", "--jobs", "3", "--out", "s.csv"];
    args.extend(SMALL);
    let o = osm(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let full = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(full.lines().count(), 10);
    assert!(full.starts_with("w,h,status,evac_time,clogged,tm_1.25,tm_1.50,tm_1.75,tm_2.00,tm_2.25\n"));
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(side["baseSeed"], 0);
    assert_eq!(side["grid"]["nW"], 3);
    assert_eq!(side["scenarioHash"].as_str().unwrap().len(), 64);

    // interrupted: four rows plus a torn fifth
    let lines: Vec<&str> = full.lines().collect();
    let mut partial = lines[..5].join("\n");
    partial.push('\n');
    partial.push_str(&lines[5][..10]);
    fs::write(dir.path().join("s.csv"), partial).unwrap();
    let o = osm(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("4 of 9 cells done"));
    assert_eq!(fs::read_to_string(dir.path().join("s.csv")).unwrap(), full);

    // different settings refuse to resume
    let o = osm(&["sweep", "--grid", "3x3", "--out", "s.csv", "--agents", "13", "--max-time", "60"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut one = vec!["sweep", "--grid", "2x3", "--jobs", "1", "--seed", "5", "--out", "one.csv"];
    one.extend(SMALL);
    assert_eq!(osm(&one, dir.path()).status.code(), Some(0));
    let mut args = vec!["sweep", "--grid", "2x3", "--seed", "5", "--out", "many.csv"];
    args.extend(SMALL);
    let o = Command::new(env!("CARGO_BIN_EXE_osm"))
        .args(&args)
        .current_dir(dir.path())
        .env("OSM_JOBS", "8")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read(dir.path().join("one.csv")).unwrap(),
        fs::read(dir.path().join("many.csv")).unwrap()
    );
}

#[test]
fn failed_cells_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = osm(&["sweep", "--grid", "2x2", "--agents", "500", "--out", "f.csv"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let table = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    assert_eq!(table.matches(",failed,").count(), 4);
}

/// 11x11 table whose zero set is `w >= 2.0, h >= 240` and whose 10 s band
/// is the row at h = 715.
fn write_synthetic(path: &Path) {
    let grid = make_grid(11, 11, DEFAULT_W_BOUNDS, DEFAULT_H_BOUNDS).unwrap();
    let cells = (0..grid.len())
        .map(|k| {
            let (wi, hi) = grid.indices(k);
            let (w, h) = grid.points[k];
            let uc1 = if wi >= 2 && hi >= 2 { 0.0 } else { 40.0 };
            let uc2 = if hi == 7 { 10.5 } else { 60.0 };
            CellResult {
                w,
                h,
                status: CellStatus::Ok,
                evac_time: Some(120.0),
                clogged: false,
                t_m: vec![uc1, uc1, uc1, uc2, uc2],
            }
        })
        .collect();
    let r = SweepResult {
        grid,
        d_list: SocialDistance::STUDY.to_vec(),
        cells,
    };
    fs::write(path, r.to_csv()).unwrap();
}

#[test]
fn verify_reports_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(&dir.path().join("sweep.csv"));
    let o = osm(&["verify", "--use-case", "1", "--d", "1.5", "--result", "sweep.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "uc1 d=1.5 point=(2.625,550) PASS\n");

    let o = osm(&["verify", "--use-case", "2", "--d", "2.0", "--result", "sweep.csv", "--json", "v.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o), "uc2 d=2.0 point=(2.57,750) PASS\n");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    assert_eq!(v[0]["useCase"], 2);
    assert_eq!(v[0]["pass"], true);

    // the d = 2.0 zero set is empty here
    let o = osm(&["verify", "--use-case", "1", "--use-case", "2", "--d", "1.5", "--d", "2.0", "--result", "sweep.csv"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stdout(&o).lines().count(), 4);

    let o = osm(&["verify", "--use-case", "1", "--d", "1.6", "--result", "sweep.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tm_1.60"));
    let o = osm(&["verify", "--use-case", "1", "--d", "1.5", "--result", "absent.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = osm(&["verify", "--use-case", "3", "--d", "1.5", "--result", "sweep.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn analyze_writes_curves_verdicts_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(&dir.path().join("sweep.csv"));
    let o = osm(&["analyze", "--result", "sweep.csv", "--out", "an"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let an = dir.path().join("an");
    let curves = fs::read_to_string(an.join("curves.csv")).unwrap();
    assert!(curves.starts_with("use_case,d,vertex_index,w,h\n"));
    let verdicts: serde_json::Value = serde_json::from_str(&fs::read_to_string(an.join("verdicts.json")).unwrap()).unwrap();
    assert_eq!(verdicts.as_array().unwrap().len(), 10);
    for f in ["heatmap_d1.25.svg", "heatmap_d2.25.svg", "indifference_curves.svg"] {
        assert!(an.join(f).exists(), "{f}");
    }
}

#[test]
fn emitted_builtin_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = osm(&["scenario", "emit-builtin"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(scenario_from_json(&stdout(&o)).unwrap(), bottleneck_scenario());
    let o = osm(&["scenario", "emit-builtin", "--out", "b.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let o = osm(&["run", "--scenario", "b.json", "--agents", "5", "--max-time", "5", "--d", "2.0"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn help_lists_units_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = osm(&["run", "--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let help = stdout(&o);
    for flag in ["--w <METERS>", "--h <UTILITY>", "--d <METERS>", "--max-time <SECONDS>", "--measure-start <SECONDS>"] {
        assert!(help.contains(flag), "{flag}");
    }
    let o = osm(&["--help"], dir.path());
    assert!(stdout(&o).contains("4 verification failed"));
    let o = osm(&["sweep", "--help"], dir.path());
    assert!(stdout(&o).contains("OSM_JOBS"));
}
