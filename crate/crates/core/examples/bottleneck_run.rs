//! One simulation of the bottleneck scenario at a chosen personal space.
//!
//! cargo run --release --example bottleneck_run -- 2.0 300 7

use osm_core::engine::{simulate, SimConfig};
use osm_core::metrics::{clogging, contact_ledger};
use osm_core::potential::SocialDistance;
use osm_core::scenario::bottleneck_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let w: f64 = args.first().map_or(Ok(1.2), |s| s.parse())?;
    let h: f64 = args.get(1).map_or(Ok(50.0), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(0), |s| s.parse())?;

    let (topo, pop) = bottleneck_scenario();
    let cfg = SimConfig {
        potential: SimConfig::default().potential.with_personal_space(w, h),
        seed,
        ..SimConfig::default()
    };
    let log = simulate(&topo, &pop, &cfg)?;
    let report = clogging(&log, &topo, 30.0);
    println!(
        "w={w} h={h} seed={seed}: {} of {} agents out, last exit {:?}, clogged={}",
        report.exited_count,
        pop.count,
        report.last_exit_time,
        report.clogged
    );
    for d in SocialDistance::STUDY {
        let ledger = contact_ledger(&log, d, 20.0)?;
        println!("  d={:.2} m  t_m={:8.3} s  episodes={}", d.meters(), ledger.t_m, ledger.episodes.len());
    }
    Ok(())
}
