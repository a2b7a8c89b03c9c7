//! Checks a participation-by-instrument counts table against its printed
//! margins, then shows what a one-count typo looks like.
//!
//!     cargo run --example validate_counts -- [counts.csv]

use std::path::PathBuf;

use ambipolicy::cli::{cmd_validate, CountsTable};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/jtpa_counts.csv"));
    match cmd_validate(&path) {
        Ok(report) => {
            let t = &report.table;
            println!("{}: all margins agree, total {}", path.display(), t.total);
            let share = |d: usize, z: usize| t.cells[d][z] as f64 / t.column_totals[z] as f64;
            println!("participation given z=0: {:.4}, given z=1: {:.4}", share(1, 0), share(1, 1));
        }
        Err(e) => println!("{e}"),
    }

    let typo = "participation,z0,z1,total\n0,3047,2118,5165\n1,44,4015,4058\ntotal,3090,6133,9223\n";
    let report = CountsTable::parse(typo, "typo").expect("well-formed").check();
    for c in report.checks.iter().filter(|c| c.printed != c.computed) {
        println!("typo table: {} printed {} computed {}", c.margin, c.printed, c.computed);
    }
}
