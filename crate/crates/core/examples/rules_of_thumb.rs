//! Prints the personal-space rules of thumb for both use cases and simulates
//! each recommended setting once.

use osm_core::analysis::UseCase;
use osm_core::engine::{simulate, SimConfig};
use osm_core::metrics::contact_ledger;
use osm_core::potential::SocialDistance;
use osm_core::scenario::bottleneck_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (topo, pop) = bottleneck_scenario();
    println!("use case  d [m]   w [m]   h      t_m [s]");
    for uc in [UseCase::NoContact, UseCase::AverageContact] {
        for d in SocialDistance::STUDY {
            let rule = uc.rule(d)?;
            let cfg = SimConfig {
                potential: SimConfig::default().potential.with_personal_space(rule.width, rule.height),
                seed: 1,
                ..SimConfig::default()
            };
            let log = simulate(&topo, &pop, &cfg)?;
            let t_m = contact_ledger(&log, d, 20.0)?.t_m;
            println!("uc{}       {:.2}    {:.3}   {:5.0}  {:7.3}", uc.number(), d.meters(), rule.width, rule.height, t_m);
        }
    }
    // outside the fitted domain the rules refuse to extrapolate
    assert!(UseCase::NoContact.rule(SocialDistance(3.0)).is_err());
    Ok(())
}
