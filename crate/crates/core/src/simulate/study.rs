use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::dgp::{generate, SyntheticDgp};
use super::truth::OracleSample;
use crate::bounds::Scheme;
use crate::error::{Error, Result};
use crate::model::{empirical_objective, evaluate_policy, OutcomeRange, PolicyClassSpec, PolicyKind};
use crate::nuisance::{crossfit, LearnerSpec, DEFAULT_ETA};
use crate::numfmt;
use crate::optimize::{solve, LinearOptions, SolveResult};
use crate::scores::{build_scores, Criterion, ScoreMode};
use crate::seeding::{derive, stream};
use crate::stats::{fit_line, LineFit, Summary};

pub const STUDY_SCHEMA_VERSION: u32 = 1;

/// Largest oracle sample the exact two-term linear enumeration accepts.
const MAX_LINEAR_ORACLE: usize = 20_000;

/// A named preset or a fully written-out design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DgpChoice {
    Preset(String),
    Custom(SyntheticDgp),
}

impl DgpChoice {
    pub fn resolve(&self) -> Result<SyntheticDgp> {
        let dgp = match self {
            DgpChoice::Preset(name) => SyntheticDgp::preset(name)?,
            DgpChoice::Custom(d) => d.clone(),
        };
        dgp.validate()?;
        Ok(dgp)
    }
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

/// Monte Carlo regret study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub schema_version: u32,
    pub dgp: DgpChoice,
    pub scheme: Scheme,
    pub criterion: Criterion,
    pub learner: LearnerSpec,
    pub folds: usize,
    #[serde(default = "default_eta", with = "numfmt::float")]
    pub eta: f64,
    pub policy_class: PolicyClassSpec,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub n_oracle: usize,
    pub seed: u64,
    #[serde(default)]
    pub linear: LinearOptions,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<SyntheticDgp> {
        if self.schema_version != STUDY_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "study schema_version {} is not supported (expected {STUDY_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let dgp = self.dgp.resolve()?;
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] == 0 {
            return Err(Error::Config("n_grid must be non-empty, positive and strictly ascending".into()));
        }
        if self.replications < 2 {
            return Err(Error::Config(format!("need at least 2 replications, got {}", self.replications)));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.n_oracle == 0 {
            return Err(Error::Config("n_oracle must be positive".into()));
        }
        self.criterion.validate()?;
        self.learner.validate()?;
        self.policy_class.validate(dgp.dim)?;
        Ok(dgp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretRecord {
    pub n: usize,
    pub mode: ScoreMode,
    pub replication: usize,
    #[serde(with = "numfmt::float")]
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub n: usize,
    pub mode: ScoreMode,
    #[serde(with = "numfmt::float")]
    pub mean: f64,
    #[serde(with = "numfmt::float")]
    pub se: f64,
    #[serde(with = "numfmt::float")]
    pub min: f64,
    #[serde(with = "numfmt::float")]
    pub max: f64,
}

/// Log-log fit of mean regret against `n`; absent with fewer than three
/// grid points or a non-positive mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub mode: ScoreMode,
    pub fit: Option<LineFit>,
}

/// Paired comparison at one `n`: `diff = regret(plug-in) - regret(orthogonal)`,
/// one-sided against `mean diff <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedTest {
    pub n: usize,
    #[serde(with = "numfmt::float")]
    pub mean_diff: f64,
    #[serde(with = "numfmt::float")]
    pub se: f64,
    #[serde(with = "numfmt::float")]
    pub t: f64,
    #[serde(with = "numfmt::float")]
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleInfo {
    pub n_oracle: usize,
    pub seed: u64,
    pub best: SolveResult,
    /// Monte Carlo standard error of the best policy's objective.
    #[serde(with = "numfmt::float")]
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaEntry {
    pub n: usize,
    /// Training-fold size `n (1 - 1/K)`.
    #[serde(with = "numfmt::float")]
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub schema_version: u32,
    pub config: StudyConfig,
    pub kappa: Vec<KappaEntry>,
    pub oracle: OracleInfo,
    pub records: Vec<RegretRecord>,
    pub aggregates: Vec<Aggregate>,
    pub slopes: Vec<SlopeFit>,
    pub paired: Vec<PairedTest>,
    /// Regrets below `-2` oracle standard errors.
    pub negative_regrets: usize,
}

impl RegretReport {
    pub fn aggregate(&self, n: usize, mode: ScoreMode) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.n == n && a.mode == mode)
    }

    pub fn slope(&self, mode: ScoreMode) -> Option<LineFit> {
        self.slopes.iter().find(|s| s.mode == mode).and_then(|s| s.fit)
    }

    pub fn paired_at(&self, n: usize) -> Option<&PairedTest> {
        self.paired.iter().find(|p| p.n == n)
    }

    /// Flat `n,mode,replication,regret` table.
    pub fn records_csv(&self) -> String {
        let mut out = String::from("n,mode,replication,regret\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.n, r.mode.name(), r.replication, numfmt::fixed(r.regret)));
        }
        out
    }
}

fn oracle_options(spec: &PolicyClassSpec, n_oracle: usize) -> Result<LinearOptions> {
    if spec.kind == PolicyKind::Linear {
        let d = spec.terms().len();
        if d > 2 {
            return Err(Error::Config(format!(
                "oracle policy must be solved exactly; linear class with {d} terms only has a heuristic solver"
            )));
        }
        if n_oracle > MAX_LINEAR_ORACLE {
            return Err(Error::Config(format!(
                "exact linear oracle is limited to {MAX_LINEAR_ORACLE} units, got {n_oracle}"
            )));
        }
    }
    Ok(LinearOptions { max_exact_n: n_oracle.max(1), force_local: false, ..LinearOptions::default() })
}

fn best_on_oracle(oracle: &OracleSample, gamma: &[f64], spec: &PolicyClassSpec) -> Result<SolveResult> {
    let res = solve(gamma, oracle.table(), spec, &oracle_options(spec, oracle.n())?)?;
    if !res.exact {
        return Err(Error::Numerical("oracle solver did not certify an exact optimum".into()));
    }
    Ok(res)
}

/// Exact best-in-class policy for the true scores on an oracle draw.
pub fn best_in_class(
    dgp: &SyntheticDgp,
    spec: &PolicyClassSpec,
    scheme: &Scheme,
    criterion: &Criterion,
    n_oracle: usize,
    seed: u64,
) -> Result<SolveResult> {
    spec.validate(dgp.dim)?;
    oracle_options(spec, n_oracle)?;
    let oracle = OracleSample::draw(dgp, n_oracle, seed)?;
    let gamma = oracle.true_scores(scheme, criterion)?;
    best_on_oracle(&oracle, &gamma, spec)
}

fn paired_test(n: usize, plugin: &[f64], orth: &[f64]) -> PairedTest {
    let diffs: Vec<f64> = plugin.iter().zip(orth).map(|(p, o)| p - o).collect();
    let s = Summary::of(&diffs);
    let se = s.se();
    let (t, p_value) = if se > 0.0 {
        let t = s.mean / se;
        let dist = StudentsT::new(0.0, 1.0, (diffs.len() - 1) as f64).expect("degrees of freedom are positive");
        (t, 1.0 - dist.cdf(t))
    } else if s.mean > 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        (0.0, 1.0)
    };
    PairedTest { n, mean_diff: s.mean, se, t, p_value }
}

const MODES: [ScoreMode; 2] = [ScoreMode::Orthogonal, ScoreMode::PlugIn];

/// Runs every `(n, replication)` cell, evaluates both score modes against
/// the oracle proxy and summarizes.
pub fn run_study(config: &StudyConfig) -> Result<RegretReport> {
    let dgp = config.validate()?;
    let oracle_seed = derive(config.seed, &[stream::ORACLE]);
    let oracle = OracleSample::draw(&dgp, config.n_oracle, oracle_seed)?;
    let truth_gamma = oracle.true_scores(&config.scheme, &config.criterion)?;
    let best = best_on_oracle(&oracle, &truth_gamma, &config.policy_class)?;
    let q_star = best.objective;
    let contrib: Vec<f64> = truth_gamma
        .iter()
        .zip(&best.assignment)
        .map(|(g, &a)| if a == 1 { *g } else { -*g })
        .collect();
    let oracle_se = Summary::of(&contrib).se();

    let range = OutcomeRange::unit();
    let jobs: Vec<(usize, usize)> =
        config.n_grid.iter().flat_map(|&n| (0..config.replications).map(move |r| (n, r))).collect();
    let results: Vec<Result<[f64; 2]>> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let run = || -> Result<[f64; 2]> {
                let seed = derive(config.seed, &[stream::REPLICATION, n as u64, r as u64]);
                let (table, _) = generate(&dgp, n, seed)?;
                let nuis = crossfit(&table, &config.learner, config.folds, config.eta, seed)?;
                let sv = build_scores(&table, &nuis, &config.scheme, &range, &config.criterion, ScoreMode::Orthogonal)?;
                let mut out = [0.0; 2];
                for (slot, mode) in MODES.iter().enumerate() {
                    let fit = solve(&sv.gamma_for(*mode), &table, &config.policy_class, &config.linear)?;
                    let assign = evaluate_policy(&fit.policy, oracle.table())?;
                    out[slot] = q_star - empirical_objective(&truth_gamma, &assign)?;
                }
                Ok(out)
            };
            run().map_err(|e| e.context(format!("replication {r} at n={n}")))
        })
        .collect();

    let mut records = Vec::with_capacity(jobs.len() * 2);
    let mut per_cell: Vec<[Vec<f64>; 2]> = vec![[vec![], vec![]]; config.n_grid.len()];
    for (&(n, r), res) in jobs.iter().zip(results) {
        let regrets = res?;
        let gi = config.n_grid.iter().position(|&m| m == n).expect("n comes from the grid");
        for (slot, mode) in MODES.iter().enumerate() {
            records.push(RegretRecord { n, mode: *mode, replication: r, regret: regrets[slot] });
            per_cell[gi][slot].push(regrets[slot]);
        }
    }

    let mut aggregates = vec![];
    for (gi, &n) in config.n_grid.iter().enumerate() {
        for (slot, mode) in MODES.iter().enumerate() {
            let s = Summary::of(&per_cell[gi][slot]);
            aggregates.push(Aggregate { n, mode: *mode, mean: s.mean, se: s.se(), min: s.min, max: s.max });
        }
    }
    let slopes = MODES
        .iter()
        .enumerate()
        .map(|(slot, mode)| {
            let means: Vec<f64> = per_cell.iter().map(|c| Summary::of(&c[slot]).mean).collect();
            let fit = (means.len() >= 3 && means.iter().all(|m| *m > 0.0)).then(|| {
                let lx: Vec<f64> = config.n_grid.iter().map(|&n| (n as f64).ln()).collect();
                let ly: Vec<f64> = means.iter().map(|m| m.ln()).collect();
                fit_line(&lx, &ly)
            });
            SlopeFit { mode: *mode, fit }
        })
        .collect();
    let paired = config
        .n_grid
        .iter()
        .enumerate()
        .map(|(gi, &n)| paired_test(n, &per_cell[gi][1], &per_cell[gi][0]))
        .collect();
    let negative_regrets = records.iter().filter(|r| r.regret < -2.0 * oracle_se).count();
    let kappa = config
        .n_grid
        .iter()
        .map(|&n| KappaEntry { n, kappa: n as f64 * (1.0 - 1.0 / config.folds as f64) })
        .collect();

    Ok(RegretReport {
        schema_version: STUDY_SCHEMA_VERSION,
        config: config.clone(),
        kappa,
        oracle: OracleInfo { n_oracle: config.n_oracle, seed: oracle_seed, best, se: oracle_se },
        records,
        aggregates,
        slopes,
        paired,
        negative_regrets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> StudyConfig {
        StudyConfig {
            schema_version: STUDY_SCHEMA_VERSION,
            dgp: DgpChoice::Preset("separated".into()),
            scheme: Scheme::BalkePearl,
            criterion: Criterion::MinimaxRegret,
            learner: LearnerSpec::boosted(20, 0.2, 1),
            folds: 2,
            eta: DEFAULT_ETA,
            policy_class: PolicyClassSpec::quadrant(0, 1),
            n_grid: vec![100, 200],
            replications: 2,
            n_oracle: 2000,
            seed: 9,
            linear: LinearOptions::default(),
        }
    }

    #[test]
    fn study_is_deterministic() {
        let a = run_study(&small_config()).unwrap();
        let b = run_study(&small_config()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 8);
        assert!(a.slope(ScoreMode::Orthogonal).is_none());
        assert!(a.records_csv().starts_with("n,mode,replication,regret\n"));
    }

    #[test]
    fn config_preconditions() {
        let mut c = small_config();
        c.replications = 1;
        assert!(matches!(run_study(&c), Err(Error::Config(_))));
        let mut c = small_config();
        c.n_grid = vec![200, 100];
        assert!(run_study(&c).is_err());
        let mut c = small_config();
        c.schema_version = 7;
        assert!(run_study(&c).is_err());
    }

    #[test]
    fn treat_everyone_when_scores_are_positive() {
        let best = best_in_class(
            &SyntheticDgp::all_positive(),
            &PolicyClassSpec::quadrant(0, 1),
            &Scheme::BalkePearl,
            &Criterion::MinimaxRegret,
            5000,
            1,
        )
        .unwrap();
        assert_eq!(best.treated_share(), 1.0);
    }

    #[test]
    fn heuristic_oracle_rejected() {
        let spec = PolicyClassSpec::linear(vec![0, 1]).with_expansion(vec![crate::model::Term { feature: 0, power: 2 }]);
        let r = best_in_class(&SyntheticDgp::separated(), &spec, &Scheme::BalkePearl, &Criterion::MinimaxRegret, 100, 1);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn paired_test_direction() {
        let p = paired_test(10, &[0.3, 0.2, 0.25, 0.31], &[0.1, 0.1, 0.12, 0.1]);
        assert!(p.mean_diff > 0.0 && p.p_value < 0.05);
        let p = paired_test(10, &[0.1, 0.1], &[0.1, 0.1]);
        assert_eq!(p.p_value, 1.0);
    }
}
