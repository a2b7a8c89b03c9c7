//! Monte Carlo regret study from a JSON config, printing the per-n summary.
//!
//!     cargo run --release --example regret_study -- [config.json]
//!
//! Defaults to `fixtures/study_small.json`.

use std::path::PathBuf;

use ambipolicy::cli::load_study_config;
use ambipolicy::scores::ScoreMode;
use ambipolicy::simulate::run_study;

fn main() -> ambipolicy::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/study_small.json"));
    let cfg = load_study_config(&path)?;
    let report = run_study(&cfg)?;

    println!("oracle objective {:.4} (se {:.4})", report.oracle.best.objective, report.oracle.se);
    println!("{:>7} {:>12} {:>12} {:>10}", "n", "orthogonal", "plug-in", "p (paired)");
    for &n in &cfg.n_grid {
        let o = report.aggregate(n, ScoreMode::Orthogonal).expect("n in grid");
        let p = report.aggregate(n, ScoreMode::PlugIn).expect("n in grid");
        let test = report.paired_at(n).expect("n in grid");
        println!("{n:>7} {:>12.4} {:>12.4} {:>10.3}", o.mean, p.mean, test.p_value);
    }
    for mode in [ScoreMode::Orthogonal, ScoreMode::PlugIn] {
        if let Some(fit) = report.slope(mode) {
            println!("{} log-log slope {:.3} (R^2 {:.3})", mode.name(), fit.slope, fit.r_squared);
        }
    }
    if report.negative_regrets > 0 {
        println!("{} regrets below -2 oracle SE", report.negative_regrets);
    }
    Ok(())
}
