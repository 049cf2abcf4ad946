//! Lists the longest contact episodes of a short run and the pairs that
//! spent the most time within a social distance of each other.

use osm_core::engine::{simulate, SimConfig};
use osm_core::metrics::{contact_ledger, mean_distance};
use osm_core::potential::SocialDistance;
use osm_core::scenario::bottleneck_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (topo, mut pop) = bottleneck_scenario();
    pop.count = 40;
    let cfg = SimConfig {
        max_time: 120.0,
        seed: 11,
        ..SimConfig::default()
    };
    let log = simulate(&topo, &pop, &cfg)?;
    let ledger = contact_ledger(&log, SocialDistance(1.5), 20.0)?;
    println!("{}", ledger.summary_line());
    println!("mean nearest-neighbor distance after 20 s: {:.2} m", mean_distance(&log, 20.0)?);

    let mut episodes = ledger.episodes.clone();
    episodes.sort_by(|a, b| b.duration().total_cmp(&a.duration()));
    println!("\nlongest episodes:");
    for e in episodes.iter().take(5) {
        println!("  {:3} - {:3}  [{:6.1}, {:6.1}] s", e.i, e.j, e.start, e.end);
    }

    let mut pairs: Vec<_> = ledger.per_pair.iter().collect();
    pairs.sort_by(|a, b| b.1.total_cmp(a.1));
    println!("\nmost exposed pairs:");
    for ((i, j), t) in pairs.into_iter().take(5) {
        println!("  {i:3} - {j:3}  {t:6.1} s");
    }
    Ok(())
}
