//! Identified sets for the effect at a few covariate values, under every
//! scheme, next to the design's true effect.
//!
//!     cargo run --example bounds_schemes -- [preset]

use ambipolicy::bounds::{unit_bounds, Scheme};
use ambipolicy::simulate::{SyntheticDgp, TrueUnit};
use ambipolicy::OutcomeRange;

fn main() -> ambipolicy::Result<()> {
    let preset = std::env::args().nth(1).unwrap_or_else(|| "separated".into());
    let dgp = SyntheticDgp::preset(&preset)?;
    let range = OutcomeRange::unit();
    let schemes = [
        Scheme::Manski,
        Scheme::BalkePearl,
        Scheme::ManskiPepper { reversed: false },
        Scheme::point_late(),
    ];

    println!("{:<18} {:>8}  {:>18} {:>18} {:>18} {:>8}", "x", "cate", "manski", "balke_pearl", "manski_pepper", "late");
    for x1 in [0.1, 0.5, 0.9] {
        let mut x = vec![0.5; dgp.dim];
        x[0] = x1;
        let unit = TrueUnit::at(&dgp, &x);
        let mut cells = Vec::new();
        for scheme in &schemes {
            match unit_bounds(&unit.theta, scheme, &range) {
                Ok((b, _)) if matches!(scheme, Scheme::PointLate { .. }) => cells.push(format!("{:>8.4}", b.tau_low)),
                Ok((b, _)) => cells.push(format!("[{:>7.4}, {:>7.4}]", b.tau_low, b.tau_high)),
                Err(e) => cells.push(format!("({e})")),
            }
        }
        let label = format!("x1={x1:.1} rest=0.5");
        println!("{label:<18} {:>8.4}  {}", unit.cate, cells.join(" "));
    }
    Ok(())
}
