mod common;

use osm_core::floorfield::FloorField;
use osm_core::geometry::{Point, Polygon, Rect};
use osm_core::metrics::contact_ledger;
use osm_core::potential::{agent_potential, obstacle_potential, total_potential, Neighbor, PotentialConfig, SocialDistance};
use osm_core::scenario::{contains_free, Topography};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn room_with_blocks() -> Topography {
    Topography {
        bounds: Rect::new(0.0, 0.0, 10.0, 8.0),
        obstacles: vec![
            Rect::new(3.0, 0.0, 1.0, 3.5).to_polygon(),
            Polygon::new(vec![Point::new(6.0, 5.0), Point::new(8.0, 5.0), Point::new(7.0, 7.0)]),
        ],
        source: Rect::new(0.5, 0.5, 1.5, 1.5),
        target: Rect::new(8.5, 0.5, 1.0, 1.0),
        exit_line: None,
    }
}

/// Samples of the closed disc of radius `r` around `p`: the center and 24
/// concentric rings of 256 points.
fn disc_samples(p: Point, r: f64) -> impl Iterator<Item = Point> {
    std::iter::once(p).chain((1..=24).flat_map(move |k| {
        let rho = r * k as f64 / 24.0;
        (0..256).map(move |a| {
            let t = a as f64 * std::f64::consts::TAU / 256.0;
            p + Point::new(rho * t.cos(), rho * t.sin())
        })
    }))
}

fn sample_collides(topo: &Topography, q: Point) -> bool {
    let b = &topo.bounds;
    let outside = q.x < b.x || q.x > b.x + b.width || q.y < b.y || q.y > b.y + b.height;
    outside || topo.obstacles.iter().any(|o| o.contains(q) && o.boundary_distance(q) > 1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn free_discs_contain_no_blocked_sample(x in -0.5f64..10.5, y in -0.5f64..8.5, r in 0.05f64..0.6) {
        let topo = room_with_blocks();
        let p = Point::new(x, y);
        if contains_free(&topo, p, r) {
            prop_assert!(disc_samples(p, r * (1.0 - 1e-9)).all(|q| !sample_collides(&topo, q)));
        } else {
            // a slightly larger disc must reach a wall
            prop_assert!(disc_samples(p, r + 0.02).any(|q| sample_collides(&topo, q)));
        }
    }

    #[test]
    fn pruning_does_not_change_the_potential(
        px in 1.0f64..9.0,
        py in 4.0f64..7.5,
        others in prop::collection::vec((0.0f64..10.0, 0.0f64..8.0), 0..30),
        w in 0.5f64..5.0,
        h in 0.0f64..1000.0,
    ) {
        let topo = room_with_blocks();
        let ff = FloorField::build_static(&topo, 0.1, 0.195).unwrap();
        let cfg = PotentialConfig::default().with_personal_space(w, h);
        let p = Point::new(px, py);
        prop_assume!(contains_free(&topo, p, 0.195));
        let neighbors: Vec<Neighbor> = others
            .iter()
            .map(|&(x, y)| Neighbor { position: Point::new(x, y), radius: 0.195 })
            .collect();
        let pruned = total_potential(p, 0.195, &neighbors, &ff, &topo, &cfg).unwrap();
        let mut full = ff.query(p).unwrap();
        for n in &neighbors {
            full += agent_potential(p.distance(n.position), 0.39, &cfg);
        }
        full += obstacle_potential(topo.clearance(p) - 0.195, &cfg);
        prop_assert!((pruned - full).abs() <= 1e-12 * full.abs().max(1.0), "{} vs {}", pruned, full);
    }

    #[test]
    fn ledger_matches_pairwise_count(seed in any::<u64>(), d in 0usize..5, t0_frame in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log = common::random_log(&mut rng);
        let d = SocialDistance::STUDY[d];
        let t0 = t0_frame as f64 * log.frame_interval;
        let ledger = contact_ledger(&log, d, t0).unwrap();
        let (episodes, t_m) = common::brute_force_contacts(&log, d, t0);
        let got: Vec<_> = ledger.episodes.iter().map(|e| (e.i, e.j, e.start, e.end)).collect();
        prop_assert_eq!(got, episodes);
        prop_assert!((ledger.t_m - t_m).abs() <= 1e-12);
    }
}
