//! Share of units whose bound sits within `t` of zero, for the separated and
//! smooth-crossing designs.
//!
//!     cargo run --release --example margin_diagnostic

use ambipolicy::bounds::Scheme;
use ambipolicy::simulate::{margin_diagnostic, OracleSample, SyntheticDgp};

fn main() -> ambipolicy::Result<()> {
    let grid: Vec<f64> = (1..=12).map(|k| k as f64 * 0.02).collect();
    for (name, dgp) in [("separated", SyntheticDgp::separated()), ("smooth_crossing", SyntheticDgp::smooth_crossing())] {
        let sample = OracleSample::draw(&dgp, 50_000, 1)?;
        let curve = margin_diagnostic(&sample.truth().bounds(&Scheme::BalkePearl)?, &grid)?;
        println!("{name}");
        for c in &curve.components {
            let cells: Vec<String> = c.fractions.iter().map(|f| format!("{f:.3}")).collect();
            let fit = c.fit.map_or(String::new(), |f| format!("slope {:.3} R^2 {:.3}", f.slope, f.r_squared));
            println!("  {:<12} {}  {fit}", c.name, cells.join(" "));
        }
    }
    println!("t grid: {grid:?}");
    Ok(())
}
