//! Plug-in and orthogonal scores for every decision criterion on one sample,
//! with the share of units each criterion would treat.
//!
//!     cargo run --release --example score_criteria

use ambipolicy::bounds::Scheme;
use ambipolicy::nuisance::{crossfit, LearnerSpec};
use ambipolicy::scores::{build_scores, Criterion, ScoreMode};
use ambipolicy::simulate::{generate, SyntheticDgp};
use ambipolicy::stats::Summary;
use ambipolicy::{OutcomeRange, Policy, Side};

fn main() -> ambipolicy::Result<()> {
    let dgp = SyntheticDgp::smooth_crossing();
    let (table, _) = generate(&dgp, 2000, 3)?;
    let range = OutcomeRange::unit();
    let nu = crossfit(&table, &LearnerSpec::default(), 5, 0.01, 3)?;
    let baseline = Policy::quadrant([0, 1], [0.5, 0.5], [Side::Above, Side::Above]);

    println!("{:<24} {:>10} {:>10} {:>10} {:>10}", "criterion", "mean plug", "mean orth", "sd orth", "treat>0");
    for criterion in Criterion::all(baseline, 0.5) {
        let sv = build_scores(&table, &nu, &Scheme::BalkePearl, &range, &criterion, ScoreMode::Orthogonal)?;
        let plug = Summary::of(&sv.gamma_for(ScoreMode::PlugIn));
        let orth = Summary::of(&sv.gamma());
        let positive = sv.gamma().iter().filter(|g| **g > 0.0).count() as f64 / sv.n() as f64;
        println!("{:<24} {:>10.4} {:>10.4} {:>10.4} {:>10.3}", criterion.name(), plug.mean, orth.mean, orth.sd, positive);
    }
    Ok(())
}
