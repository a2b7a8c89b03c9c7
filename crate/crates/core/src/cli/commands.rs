use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{RunConfig, SCHEMA_VERSION};
use super::io::read_table;
use crate::bounds::{compute_bounds, BoundsEstimate, Scheme, Slot};
use crate::error::Result;
use crate::model::{ObservationTable, Policy};
use crate::nuisance::{crossfit, ClipCounts};
use crate::numfmt::{self, fixed};
use crate::optimize::{solve, LinearOptions, SolveMethod};
use crate::scores::{scores_from_bounds, Criterion, ScoreMode, ScoreVector};
use crate::seeding::{derive, stream};
use crate::simulate::{run_study, RegretReport, StudyConfig};
use crate::stats::Summary;

/// Data, bounds and scores for one run config.
pub struct Prepared {
    pub table: ObservationTable,
    pub criterion: Criterion,
    pub clips: ClipCounts,
    pub bounds: BoundsEstimate,
}

/// Reads the data and runs cross-fitting and the bounds stage.
/// `base` is the directory relative input paths hang off.
pub fn prepare(cfg: &RunConfig, base: &Path) -> Result<Prepared> {
    cfg.validate()?;
    let criterion = cfg.criterion.resolve(base)?;
    let table = read_table(&base.join(&cfg.input), &cfg.columns, Some(cfg.outcome_range))?;
    let nuis = crossfit(&table, &cfg.learner, cfg.folds, cfg.eta, cfg.seed)?;
    let bounds = compute_bounds(&table, &nuis, &cfg.scheme, &cfg.outcome_range)?.with_offset(cfg.score_offset);
    Ok(Prepared { table, criterion, clips: nuis.clip_counts(), bounds })
}

impl Prepared {
    pub fn scores(&self, mode: ScoreMode) -> Result<ScoreVector> {
        scores_from_bounds(&self.table, &self.bounds, &self.criterion, mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClippingCounts {
    #[serde(flatten)]
    pub nuisance: ClipCounts,
    /// Nuisance values pulled into range just before the bounds were formed.
    pub bounds_stage: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub n: usize,
    pub scheme: Scheme,
    pub criterion: Criterion,
    pub mode: ScoreMode,
    pub policy: Policy,
    #[serde(with = "numfmt::float")]
    pub objective: f64,
    pub method: SolveMethod,
    pub exact: bool,
    #[serde(with = "numfmt::float")]
    pub treated_share: f64,
    /// Candidate rules whose objective tied the optimum.
    pub tie_count: usize,
    /// min/max envelopes whose two arguments were equal.
    pub envelope_ties: usize,
    pub clipping_counts: ClippingCounts,
    pub score_summary: Summary,
}

impl FitReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Cross-fit, bound, score and solve.
pub fn cmd_fit(cfg: &RunConfig, base: &Path) -> Result<FitReport> {
    let prep = prepare(cfg, base)?;
    let sv = prep.scores(cfg.mode)?;
    let gamma = sv.gamma();
    let opts = LinearOptions { seed: derive(cfg.seed, &[stream::LOCAL_SEARCH, cfg.linear.seed]), ..cfg.linear };
    let res = solve(&gamma, &prep.table, &cfg.policy_class, &opts)?;
    Ok(FitReport {
        schema_version: SCHEMA_VERSION,
        n: prep.table.n(),
        scheme: cfg.scheme,
        criterion: prep.criterion.clone(),
        mode: cfg.mode,
        treated_share: res.treated_share(),
        policy: res.policy,
        objective: res.objective,
        method: res.method,
        exact: res.exact,
        tie_count: res.ties,
        envelope_ties: prep.bounds.tie_count(),
        clipping_counts: ClippingCounts { nuisance: prep.clips, bounds_stage: prep.bounds.clip_count },
        score_summary: Summary::of(&gamma),
    })
}

/// Per-unit bounds as CSV. Envelope columns hold the instrument value each
/// min/max selected (`=` marks a tie) and are empty when the scheme has none.
pub fn cmd_bounds(cfg: &RunConfig, base: &Path) -> Result<String> {
    let prep = prepare(cfg, base)?;
    Ok(bounds_csv(&prep.bounds))
}

pub fn bounds_csv(b: &BoundsEstimate) -> String {
    let mut out = String::from("row,y0_low,y0_high,y1_low,y1_high,tau_low,tau_high");
    for s in Slot::ALL {
        let _ = write!(out, ",select_{}", s.name());
    }
    out.push('\n');
    for (i, e) in b.entries.iter().enumerate() {
        let _ = write!(out, "{i}");
        match &e.y {
            Some(y) => {
                for s in Slot::ALL {
                    let _ = write!(out, ",{}", fixed(y.get(s)));
                }
            }
            None => out.push_str(",,,,"),
        }
        let _ = write!(out, ",{},{}", fixed(e.tau_low), fixed(e.tau_high));
        for s in Slot::ALL {
            match b.selections[i].iter().find(|env| env.slot == s) {
                Some(env) if env.is_tie() => out.push_str(",="),
                Some(env) => {
                    let _ = write!(out, ",{}", env.selected_instrument());
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Per-unit scores in both modes with their decomposition, as CSV.
pub fn cmd_scores(cfg: &RunConfig, base: &Path) -> Result<String> {
    let prep = prepare(cfg, base)?;
    Ok(scores_csv(&prep.scores(cfg.mode)?))
}

pub fn scores_csv(sv: &ScoreVector) -> String {
    let k = sv.units.first().map_or(0, |u| u.components.len());
    let mut out = String::from("row,gamma_plugin,gamma_orthogonal,phi0_plugin,phi0_adjustment");
    for j in 1..=k {
        let _ = write!(out, ",c{j}_sign,c{j}_plugin,c{j}_adjustment,c{j}_active");
    }
    out.push_str(",adjustment_total\n");
    for (i, u) in sv.units.iter().enumerate() {
        let _ = write!(
            out,
            "{i},{},{},{},{}",
            fixed(u.gamma_plugin),
            fixed(u.gamma_orthogonal),
            fixed(u.phi0_plugin),
            fixed(u.phi0_adjustment)
        );
        for c in &u.components {
            let _ = write!(out, ",{},{},{},{}", c.sign, fixed(c.plugin), fixed(c.adjustment), c.active as u8);
        }
        let _ = writeln!(out, ",{}", fixed(u.adjustment_total));
    }
    out
}

/// Runs a regret study. The JSON report and the flat record CSV are both
/// available on the result.
pub fn cmd_simulate(cfg: &StudyConfig) -> Result<RegretReport> {
    run_study(cfg)
}

pub fn report_json(report: &RegretReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
