//! Builds the static floor field of the bottleneck and renders it as ASCII
//! contours, or writes the full grid as CSV when given a path.

use osm_core::floorfield::{FloorField, DEFAULT_SPACING};
use osm_core::scenario::bottleneck_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (topo, pop) = bottleneck_scenario();
    let ff = FloorField::build_static(&topo, DEFAULT_SPACING, pop.torso_radius)?;
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, ff.to_csv())?;
        println!("wrote {}x{} cells to {path}", ff.nx, ff.ny);
        return Ok(());
    }

    let shades = *b"@%#*+=-:. ";
    let max = ff.values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    // one character per 1 m x 0.5 m block
    for j in (0..ff.ny).rev().step_by(5) {
        let row: Vec<u8> = (0..ff.nx)
            .step_by(10)
            .map(|i| {
                let v = ff.value(i, j);
                if !v.is_finite() {
                    b'X'
                } else {
                    shades[((v / max) * (shades.len() - 1) as f64).round() as usize]
                }
            })
            .collect();
        println!("{}", String::from_utf8(row)?);
    }
    println!("largest distance to the target: {max:.1} m");
    Ok(())
}
