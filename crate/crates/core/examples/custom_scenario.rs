//! Builds a room with a pillar in front of the door, round-trips it through
//! JSON and simulates it.

use osm_core::engine::{simulate, SimConfig};
use osm_core::geometry::{Point, Polygon, Rect};
use osm_core::metrics::clogging;
use osm_core::scenario::{scenario_from_json, scenario_to_json, PopulationSpec, Topography};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let topo = Topography {
        bounds: Rect::new(0.0, 0.0, 20.0, 10.0),
        obstacles: vec![
            Rect::new(15.0, 0.0, 0.5, 4.4).to_polygon(),
            Rect::new(15.0, 5.6, 0.5, 4.4).to_polygon(),
            Polygon::new(vec![
                Point::new(12.0, 4.6),
                Point::new(12.8, 5.0),
                Point::new(12.0, 5.4),
            ]),
        ],
        source: Rect::new(1.0, 1.0, 6.0, 8.0),
        target: Rect::new(18.0, 4.0, 1.5, 2.0),
        exit_line: None,
    };
    let pop = PopulationSpec {
        count: 50,
        ..PopulationSpec::default()
    };
    let json = scenario_to_json(&topo, &pop);
    let (topo, pop) = scenario_from_json(&json)?;
    println!("{json}");

    let cfg = SimConfig {
        max_time: 200.0,
        ..SimConfig::default()
    };
    let log = simulate(&topo, &pop, &cfg)?;
    let report = clogging(&log, &topo, 30.0);
    println!("{} of {} out by {:?} s", report.exited_count, pop.count, report.last_exit_time);
    Ok(())
}
