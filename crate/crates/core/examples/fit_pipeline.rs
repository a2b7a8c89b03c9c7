//! End-to-end fit from a run config: data, cross-fitting, bounds, scores
//! and the selected rule, printed as the JSON report.
//!
//!     cargo run --release --example fit_pipeline -- [config.json]
//!
//! Defaults to `fixtures/fit_mmr_balke_pearl.json`.

use std::path::PathBuf;

use ambipolicy::cli::{cmd_fit, load_run_config, prepare};
use ambipolicy::scores::ScoreMode;
use ambipolicy::stats::Summary;

fn main() -> ambipolicy::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/fit_mmr_balke_pearl.json"));
    let cfg = load_run_config(&path)?;
    let base = path.parent().map(PathBuf::from).unwrap_or_default();

    let prepared = prepare(&cfg, &base)?;
    let widths: Vec<f64> = prepared.bounds.entries.iter().map(|b| b.tau_high - b.tau_low).collect();
    let w = Summary::of(&widths);
    eprintln!("{} rows, mean bound width {:.4} (min {:.4}, max {:.4})", prepared.table.n(), w.mean, w.min, w.max);
    let sv = prepared.scores(ScoreMode::Orthogonal)?;
    let shift = Summary::of(&sv.units.iter().map(|u| u.adjustment_total).collect::<Vec<_>>());
    eprintln!("mean orthogonal adjustment {:.4} (sd {:.4})", shift.mean, shift.sd);

    print!("{}", cmd_fit(&cfg, &base)?.to_json());
    Ok(())
}
