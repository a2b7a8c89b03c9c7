//! Regret of the plug-in and orthogonal rules on repeated samples from one
//! design, against the best rule in the class.
//!
//!     cargo run --release --example orthogonal_vs_plugin -- [n] [reps]

use ambipolicy::bounds::Scheme;
use ambipolicy::nuisance::{crossfit, LearnerSpec};
use ambipolicy::optimize::solve_quadrant;
use ambipolicy::scores::{build_scores, Criterion, ScoreMode};
use ambipolicy::seeding;
use ambipolicy::simulate::{best_in_class, generate, OracleSample, SyntheticDgp};
use ambipolicy::{empirical_objective, evaluate_policy, OutcomeRange, PolicyClassSpec};

fn main() -> ambipolicy::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let reps: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);

    let dgp = SyntheticDgp::slow_learner_stress();
    let class = PolicyClassSpec::quadrant(0, 1);
    let (scheme, crit) = (Scheme::BalkePearl, Criterion::MinimaxRegret);
    let learner = LearnerSpec::k_nearest(Some(5));
    let oracle = OracleSample::draw(&dgp, 50_000, 99)?;
    let truth = oracle.true_scores(&scheme, &crit)?;
    let best = best_in_class(&dgp, &class, &scheme, &crit, 50_000, 99)?;

    let (mut plug, mut orth) = (0.0, 0.0);
    for r in 0..reps {
        let seed = seeding::derive(5, &[r]);
        let (table, _) = generate(&dgp, n, seed)?;
        let nu = crossfit(&table, &learner, 5, 0.1, seed)?;
        let sv = build_scores(&table, &nu, &scheme, &OutcomeRange::unit(), &crit, ScoreMode::Orthogonal)?;
        for (mode, acc) in [(ScoreMode::PlugIn, &mut plug), (ScoreMode::Orthogonal, &mut orth)] {
            let rule = solve_quadrant(&sv.gamma_for(mode), &table, &class)?;
            let value = empirical_objective(&truth, &evaluate_policy(&rule.policy, oracle.table())?)?;
            *acc += best.objective - value;
        }
    }
    println!("n = {n}, {reps} samples, best-in-class objective {:.4}", best.objective);
    println!("mean regret plug-in    {:.4}", plug / reps as f64);
    println!("mean regret orthogonal {:.4}", orth / reps as f64);
    Ok(())
}
