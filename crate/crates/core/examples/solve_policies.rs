//! Exact policy search over quadrant and linear-index rules for a fixed
//! score vector.
//!
//!     cargo run --release --example solve_policies

use ambipolicy::optimize::{solve, verify_solution, LinearOptions};
use ambipolicy::seeding;
use ambipolicy::{ObservationTable, PolicyClassSpec};
use rand::Rng;

fn main() -> ambipolicy::Result<()> {
    let mut rng = seeding::rng(2, &[]);
    let n = 400;
    let x: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0.0..1.0)).collect();
    // benefit where x1 + x2 > 1, plus noise
    let gamma: Vec<f64> = (0..n).map(|i| x[2 * i] + x[2 * i + 1] - 1.0 + rng.gen_range(-0.3..0.3)).collect();
    let table = ObservationTable::covariates_only(x, 2)?;

    let classes = [
        ("quadrant", PolicyClassSpec::quadrant(0, 1)),
        ("linear x1", PolicyClassSpec::linear(vec![0])),
        ("linear x1,x2", PolicyClassSpec::linear(vec![0, 1])),
    ];
    for (name, class) in classes {
        let r = solve(&gamma, &table, &class, &LinearOptions::default())?;
        println!(
            "{name:<13} objective {:.4} treated {:.3} exact {} ties {} verified {}",
            r.objective,
            r.treated_share(),
            r.exact,
            r.ties,
            verify_solution(&r, &gamma, &table)
        );
        println!("              {}", serde_json::to_string(&r.policy).expect("policy serializes"));
    }
    Ok(())
}
