//! A coarse parameter sweep with a reduced crowd, followed by the
//! indifference-curve analysis and SVG plots in a temporary directory.

use osm_core::analysis::{curves_csv, emit_plots, indifference_curve, verify_rule, Band, UseCase};
use osm_core::engine::SimConfig;
use osm_core::scenario::bottleneck_scenario;
use osm_core::sweep::{make_grid, run_sweep, SweepConfig, DEFAULT_H_BOUNDS, DEFAULT_W_BOUNDS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (topo, mut pop) = bottleneck_scenario();
    pop.count = 30;
    let base = SimConfig {
        max_time: 150.0,
        ..SimConfig::default()
    };
    let grid = make_grid(4, 4, DEFAULT_W_BOUNDS, DEFAULT_H_BOUNDS)?;
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let result = run_sweep(&topo, &pop, &base, &grid, &SweepConfig::default(), jobs, None)?;
    print!("{}", result.to_csv());

    let mut curves = Vec::new();
    for &d in &result.d_list {
        for uc in [UseCase::NoContact, UseCase::AverageContact] {
            curves.push(indifference_curve(&result, d, uc, Band::default())?);
            println!("{}", verify_rule(&result, d, uc, Band::default())?.line());
        }
    }
    let out = std::env::temp_dir().join("osm-small-sweep");
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("curves.csv"), curves_csv(&curves))?;
    for f in emit_plots(&result, &curves, &out)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
