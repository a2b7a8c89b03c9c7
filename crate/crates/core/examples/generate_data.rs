//! Draws a sample from a synthetic design and prints it as CSV.
//!
//!     cargo run --example generate_data -- [preset] [n] [seed]
//!
//! Presets: separated, smooth_crossing, point_mass, full_compliance,
//! all_positive, slow_learner_stress.

use ambipolicy::cli::table_csv;
use ambipolicy::simulate::{generate, SyntheticDgp};

fn main() -> ambipolicy::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let preset = args.first().map_or("separated", String::as_str);
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let dgp = SyntheticDgp::preset(preset)?;
    let (table, truth) = generate(&dgp, n, seed)?;
    let names: Vec<String> = (1..=dgp.dim).map(|j| format!("x{j}")).collect();
    print!("{}", table_csv(&table, &names)?);

    let cate = truth.cate();
    let mean = cate.iter().sum::<f64>() / n as f64;
    eprintln!("{n} rows from `{preset}`; mean conditional effect {mean:.4}");
    Ok(())
}
