//! Cross-fits the nuisance regressions on a synthetic sample and compares
//! them with the design's true values.
//!
//!     cargo run --release --example crossfit_nuisances -- [n] [knn|boost]

use ambipolicy::nuisance::{crossfit, LearnerSpec};
use ambipolicy::simulate::{generate, SyntheticDgp};
use ambipolicy::OutcomeRange;

fn main() -> ambipolicy::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(4000);
    let learner = match args.get(1).map(String::as_str) {
        Some("knn") => LearnerSpec::k_nearest(None),
        _ => LearnerSpec::default(),
    };

    let dgp = SyntheticDgp::separated();
    let (table, truth) = generate(&dgp, n, 11)?;
    let table = table.with_range(Some(OutcomeRange::unit()))?;
    let nu = crossfit(&table, &learner, 5, 0.01, 11)?;

    println!("n = {n}, folds = {:?}", nu.folds().sizes());
    println!("clipped: {:?}", nu.clip_counts());

    let mut sq = [0.0f64; 9];
    for (row, unit) in nu.rows().iter().zip(&truth.units) {
        let t = &unit.theta;
        let diffs = [
            row.h[0] - t.h[0],
            row.h[1] - t.h[1],
            row.m[0][0] - t.m[0][0],
            row.m[0][1] - t.m[0][1],
            row.m[1][0] - t.m[1][0],
            row.m[1][1] - t.m[1][1],
            row.p[0] - t.p[0],
            row.p[1] - t.p[1],
            row.zhat - unit.zprob,
        ];
        for (s, d) in sq.iter_mut().zip(diffs) {
            *s += d * d;
        }
    }
    let names = ["h0", "h1", "m00", "m01", "m10", "m11", "p0", "p1", "zhat"];
    for (name, s) in names.iter().zip(sq) {
        println!("rmse {name:<4} {:.4}", (s / n as f64).sqrt());
    }
    Ok(())
}
