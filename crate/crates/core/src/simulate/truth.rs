//! Exact conditional truths of a synthetic design.
//!
//! Bounds here are written from the compliance-type decomposition rather
//! than from the reduced-form nuisances, so they serve as an independent
//! check of the estimators in `bounds`.

use super::dgp::{generate, SyntheticDgp};
use crate::bounds::{BoundsEntry, OutcomeBounds, Scheme};
use crate::error::{Error, Result};
use crate::model::ObservationTable;
use crate::nuisance::PointNuisance;
use crate::scores::{plugin_score, Criterion};

/// Design quantities at one covariate value. Outcome range is `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueUnit {
    pub zprob: f64,
    pub complier: f64,
    pub always: f64,
    pub never: f64,
    /// `[untreated, treated]` means for compliers, always-takers, never-takers.
    pub mu_c: [f64; 2],
    pub mu_a: [f64; 2],
    pub mu_n: [f64; 2],
    /// Reduced-form nuisances implied by the design.
    pub theta: PointNuisance,
    /// `E[Y(1) - Y(0) | X]`, including the unidentified type means.
    pub cate: f64,
}

/// Sharp bounds on `E[Y(d) | Z=z, X]` for `d` in `{0, 1}`, indexed `[d][z]`.
struct ArmBounds {
    low: [[f64; 2]; 2],
    high: [[f64; 2]; 2],
}

impl TrueUnit {
    pub fn at(dgp: &SyntheticDgp, x: &[f64]) -> TrueUnit {
        let c = dgp.complier.eval(x);
        let a = dgp.always_taker.eval(x);
        let n = 1.0 - c - a;
        let pair = |m: &super::dgp::ArmMeans| [m.untreated.eval(x), m.treated.eval(x)];
        let (mu_c, mu_a, mu_n) = (pair(&dgp.complier_outcome), pair(&dgp.always_outcome), pair(&dgp.never_outcome));
        let zprob = dgp.instrument.eval(x);
        let ratio = |num: f64, den: f64, fallback: f64| if den > 0.0 { num / den } else { fallback };
        // cell means; an empty cell takes the arm mean so h stays consistent
        let m11 = ratio(c * mu_c[1] + a * mu_a[1], c + a, mu_a[1]);
        let m10 = mu_a[1];
        let m01 = mu_n[0];
        let m00 = ratio(c * mu_c[0] + n * mu_n[0], c + n, mu_n[0]);
        let theta = PointNuisance::from_cells([[m00, m01], [m10, m11]], [a, c + a], zprob);
        let cate = c * (mu_c[1] - mu_c[0]) + a * (mu_a[1] - mu_a[0]) + n * (mu_n[1] - mu_n[0]);
        TrueUnit { zprob, complier: c, always: a, never: n, mu_c, mu_a, mu_n, theta, cate }
    }

    /// Each instrument arm alone: observed contributions plus the missing
    /// share at the outcome-range endpoints.
    fn arm_bounds(&self) -> ArmBounds {
        let (c, a, n) = (self.complier, self.always, self.never);
        // treated at z=1: compliers and always-takers; at z=0: always-takers
        let seen1 = [a * self.mu_a[1], c * self.mu_c[1] + a * self.mu_a[1]];
        let miss1 = [c + n, n];
        // untreated at z=0: compliers and never-takers; at z=1: never-takers
        let seen0 = [c * self.mu_c[0] + n * self.mu_n[0], n * self.mu_n[0]];
        let miss0 = [a, c + a];
        ArmBounds {
            low: [seen0, seen1],
            high: [[seen0[0] + miss0[0], seen0[1] + miss0[1]], [seen1[0] + miss1[0], seen1[1] + miss1[1]]],
        }
    }

    /// `(tau_low, tau_high)` under monotone compliance: only the
    /// never-takers' treated mean and always-takers' untreated mean are unknown.
    pub fn balke_pearl(&self) -> (f64, f64) {
        let y = self.balke_pearl_outcomes();
        (y.y1_low - y.y0_high, y.y1_high - y.y0_low)
    }

    fn balke_pearl_outcomes(&self) -> OutcomeBounds {
        let (c, a, n) = (self.complier, self.always, self.never);
        let y1_known = c * self.mu_c[1] + a * self.mu_a[1];
        let y0_known = c * self.mu_c[0] + n * self.mu_n[0];
        OutcomeBounds { y0_low: y0_known, y0_high: y0_known + a, y1_low: y1_known, y1_high: y1_known + n }
    }

    fn manski_outcomes(&self) -> OutcomeBounds {
        let b = self.arm_bounds();
        OutcomeBounds {
            y0_low: b.low[0][0].max(b.low[0][1]),
            y0_high: b.high[0][0].min(b.high[0][1]),
            y1_low: b.low[1][0].max(b.low[1][1]),
            y1_high: b.high[1][0].min(b.high[1][1]),
        }
    }

    fn manski_pepper_outcomes(&self, reversed: bool) -> OutcomeBounds {
        let b = self.arm_bounds();
        // `hi` is the instrument value with the larger conditional means
        let (hi, lo, w) = if reversed { (0, 1, 1.0 - self.zprob) } else { (1, 0, self.zprob) };
        let one = |d: usize| {
            let low = w * b.low[d][lo].max(b.low[d][hi]) + (1.0 - w) * b.low[d][lo];
            let high = w * b.high[d][hi] + (1.0 - w) * b.high[d][lo].min(b.high[d][hi]);
            (low, high)
        };
        let ((y0_low, y0_high), (y1_low, y1_high)) = (one(0), one(1));
        OutcomeBounds { y0_low, y0_high, y1_low, y1_high }
    }

    /// True identified set for `scheme`.
    pub fn entry(&self, scheme: &Scheme) -> Result<BoundsEntry> {
        let from_y = |y: OutcomeBounds| BoundsEntry {
            y: Some(y),
            tau_low: y.y1_low - y.y0_high,
            tau_high: y.y1_high - y.y0_low,
        };
        Ok(match scheme {
            Scheme::Manski => from_y(self.manski_outcomes()),
            Scheme::BalkePearl => from_y(self.balke_pearl_outcomes()),
            Scheme::ManskiPepper { reversed } => from_y(self.manski_pepper_outcomes(*reversed)),
            Scheme::PointLate { epsilon } => {
                if self.complier < *epsilon {
                    return Err(Error::Numerical(format!(
                        "complier share {} is below epsilon {epsilon}",
                        self.complier
                    )));
                }
                let late = self.mu_c[1] - self.mu_c[0];
                BoundsEntry { y: None, tau_low: late, tau_high: late }
            }
        })
    }
}

/// Truths for every row of a generated sample, in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub units: Vec<TrueUnit>,
}

impl TruthRecord {
    pub fn bounds(&self, scheme: &Scheme) -> Result<Vec<BoundsEntry>> {
        self.units.iter().map(|u| u.entry(scheme)).collect()
    }

    pub fn cate(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.cate).collect()
    }

    /// Scores evaluated at the true bounds; `table` supplies the covariates
    /// the baseline-regret criterion reads.
    pub fn scores(&self, scheme: &Scheme, criterion: &Criterion, table: &ObservationTable) -> Result<Vec<f64>> {
        if table.n() != self.units.len() {
            return Err(Error::Invalid(format!("{} truth rows for a table of {}", self.units.len(), table.n())));
        }
        self.units
            .iter()
            .enumerate()
            .map(|(i, u)| plugin_score(&u.entry(scheme)?, criterion, Some(table.row(i))))
            .collect()
    }
}

/// Large independent draw used to evaluate policies at their population value.
#[derive(Debug, Clone)]
pub struct OracleSample {
    table: ObservationTable,
    truth: TruthRecord,
}

impl OracleSample {
    pub fn draw(dgp: &SyntheticDgp, n: usize, seed: u64) -> Result<Self> {
        let (table, truth) = generate(dgp, n, seed)?;
        Ok(OracleSample { table, truth })
    }

    pub fn table(&self) -> &ObservationTable {
        &self.table
    }

    pub fn truth(&self) -> &TruthRecord {
        &self.truth
    }

    pub fn n(&self) -> usize {
        self.table.n()
    }

    pub fn true_scores(&self, scheme: &Scheme, criterion: &Criterion) -> Result<Vec<f64>> {
        self.truth.scores(scheme, criterion, &self.table)
    }
}
