use rayon::prelude::*;
use serde::Serialize;

use super::folds::{make_folds, FoldAssignment};
use super::learners::{fit_learner, FittedModel, LearnerSpec};
use crate::error::{Error, Result};
use crate::model::{ObservationTable, OutcomeRange};
use crate::seeding::{self, stream};

/// Nuisance values at one covariate point.
///
/// Indexing: `h[z] = E[Y | Z=z, X]`, `m[d][z] = E[Y | D=d, Z=z, X]`,
/// `p[z] = P(D=1 | Z=z, X)`, `zhat = P(Z=1 | X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointNuisance {
    pub h: [f64; 2],
    pub m: [[f64; 2]; 2],
    pub p: [f64; 2],
    pub zhat: f64,
}

impl PointNuisance {
    /// Builds a point whose reduced forms are consistent with the cell means:
    /// `h[z] = p[z] m[1][z] + (1 - p[z]) m[0][z]`.
    pub fn from_cells(m: [[f64; 2]; 2], p: [f64; 2], zhat: f64) -> Self {
        let h = [0, 1].map(|z| p[z] * m[1][z] + (1.0 - p[z]) * m[0][z]);
        PointNuisance { h, m, p, zhat }
    }

    /// The six-tuple `(h1, h0, m10, m01, p1, p0)`.
    pub fn theta(&self) -> [f64; 6] {
        [self.h[1], self.h[0], self.m[1][0], self.m[0][1], self.p[1], self.p[0]]
    }

    /// Relabels the instrument, swapping the roles of `z = 0` and `z = 1`.
    pub fn swap_instrument(&self) -> Self {
        PointNuisance {
            h: [self.h[1], self.h[0]],
            m: [[self.m[0][1], self.m[0][0]], [self.m[1][1], self.m[1][0]]],
            p: [self.p[1], self.p[0]],
            zhat: 1.0 - self.zhat,
        }
    }
}

/// Row-level cross-fitted nuisances (alias kept for readability at call sites).
pub type RowNuisance = PointNuisance;

/// How many predictions were pulled back into their valid ranges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClipCounts {
    /// Outcome regressions clipped to the outcome range.
    pub outcome: usize,
    /// Treatment probabilities clipped to `[0, 1]`.
    pub treatment: usize,
    /// Instrument propensities trimmed to `[eta, 1 - eta]`.
    pub instrument: usize,
}

impl std::ops::AddAssign for ClipCounts {
    fn add_assign(&mut self, o: Self) {
        self.outcome += o.outcome;
        self.treatment += o.treatment;
        self.instrument += o.instrument;
    }
}

/// Out-of-fold nuisance predictions for every row.
#[derive(Debug, Clone)]
pub struct CrossFitNuisances {
    rows: Vec<PointNuisance>,
    folds: FoldAssignment,
    eta: f64,
    clips: ClipCounts,
    d: Vec<u8>,
    z: Vec<u8>,
}

impl CrossFitNuisances {
    /// Wraps externally computed per-row nuisances (for example true values in
    /// simulations). Probabilities are used as given.
    pub fn from_rows(table: &ObservationTable, rows: Vec<PointNuisance>, folds: FoldAssignment, eta: f64) -> Result<Self> {
        if rows.len() != table.n() || folds.n() != table.n() {
            return Err(Error::Invalid(format!(
                "{} nuisance rows and {} fold labels for {} observations",
                rows.len(),
                folds.n(),
                table.n()
            )));
        }
        Ok(CrossFitNuisances {
            rows,
            folds,
            eta,
            clips: ClipCounts::default(),
            d: table.d().to_vec(),
            z: table.z().to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn folds(&self) -> &FoldAssignment {
        &self.folds
    }

    pub fn clip_counts(&self) -> ClipCounts {
        self.clips
    }

    pub fn rows(&self) -> &[PointNuisance] {
        &self.rows
    }

    /// Nuisances at `X_i` from the model trained without fold `k(i)`.
    pub fn predict_at(&self, i: usize) -> Result<PointNuisance> {
        self.rows.get(i).copied().ok_or_else(|| {
            Error::Invalid(format!("row {i} out of bounds for {} rows", self.rows.len()))
        })
    }

    /// `m(d_i, z_i, X_i)` at the observed cell of row `i`.
    pub fn observed_mean(&self, i: usize) -> Result<f64> {
        let r = self.predict_at(i)?;
        Ok(r.m[self.d[i] as usize][self.z[i] as usize])
    }
}

struct FoldFit {
    rows: Vec<usize>,
    values: Vec<PointNuisance>,
    clips: ClipCounts,
}

/// K-fold cross-fitting of `h`, `m`, `p` and the instrument propensity.
///
/// Within each training split, `h(z, .)` and `p(z, .)` are fit on the rows
/// with `Z = z`, `m(d, z, .)` on the rows of cell `(d, z)` and `z(.)` on all
/// rows. A training split with an empty instrument arm is an error. A split
/// with an empty `(d, z)` cell but a non-empty arm `z` is accepted: the arm is
/// then all of the other cell, `m(d', z, .)` equals `h(z, .)` and the empty
/// cell carries zero weight because `p(z, .)` is exactly 0 or 1; its mean is
/// also set to `h(z, .)` so every quantity stays defined.
///
/// Outcome regressions are clipped to the table's outcome range if one is
/// attached, treatment probabilities to `[0, 1]`, and instrument propensities
/// trimmed to `[eta, 1 - eta]`.
pub fn crossfit(
    table: &ObservationTable,
    learner: &LearnerSpec,
    k: usize,
    eta: f64,
    seed: u64,
) -> Result<CrossFitNuisances> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::Invalid(format!("trim eta must lie in (0, 0.5), got {eta}")));
    }
    learner.validate()?;
    let folds = make_folds(table.n(), k, seed)?;
    let range = table.range();
    let fits: Vec<Result<FoldFit>> = (0..k)
        .into_par_iter()
        .map(|f| fit_fold(table, learner, &folds, f, eta, range, seed))
        .collect();
    let mut rows = vec![PointNuisance::from_cells([[0.0; 2]; 2], [0.0; 2], 0.5); table.n()];
    let mut clips = ClipCounts::default();
    for fit in fits {
        let fit = fit?;
        for (&i, v) in fit.rows.iter().zip(fit.values) {
            rows[i] = v;
        }
        clips += fit.clips;
    }
    Ok(CrossFitNuisances {
        rows,
        folds,
        eta,
        clips,
        d: table.d().to_vec(),
        z: table.z().to_vec(),
    })
}

fn subset(table: &ObservationTable, rows: &[usize], target: impl Fn(usize) -> f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(rows.len() * table.k_x());
    let mut y = Vec::with_capacity(rows.len());
    for &i in rows {
        x.extend_from_slice(table.row(i));
        y.push(target(i));
    }
    (x, y)
}

fn fit_fold(
    table: &ObservationTable,
    learner: &LearnerSpec,
    folds: &FoldAssignment,
    f: usize,
    eta: f64,
    range: Option<OutcomeRange>,
    seed: u64,
) -> Result<FoldFit> {
    let k_x = table.k_x();
    let (d, z, y) = (table.d(), table.z(), table.y());
    let train: Vec<usize> = (0..table.n()).filter(|&i| folds.fold_of(i) != f).collect();
    let test = folds.members(f);
    let fit = |rows: &[usize], target: &dyn Fn(usize) -> f64, id: u64| -> Result<FittedModel> {
        let (xs, ys) = subset(table, rows, target);
        fit_learner(learner, &xs, k_x, &ys, seeding::derive(seed, &[stream::LEARNER, f as u64, id]))
    };

    let mut h_models = Vec::with_capacity(2);
    let mut p_models = Vec::with_capacity(2);
    let mut m_models: [[Option<FittedModel>; 2]; 2] = Default::default();
    for zz in 0..2u8 {
        let arm: Vec<usize> = train.iter().copied().filter(|&i| z[i] == zz).collect();
        if arm.is_empty() {
            return Err(Error::Numerical(format!(
                "fold {f}: training split has no rows with instrument z={zz}"
            )));
        }
        let h = fit(&arm, &|i| y[i], 10 + zz as u64)?;
        let cells: [Vec<usize>; 2] =
            [0u8, 1].map(|dd| arm.iter().copied().filter(|&i| d[i] == dd).collect());
        for dd in 0..2 {
            let cell = &cells[dd];
            m_models[dd][zz as usize] = Some(if cell.is_empty() || cell.len() == arm.len() {
                h.clone()
            } else {
                fit(cell, &|i| y[i], 20 + 2 * dd as u64 + zz as u64)?
            });
        }
        p_models.push(fit(&arm, &|i| d[i] as f64, 30 + zz as u64)?);
        h_models.push(h);
    }
    let z_model = fit(&train, &|i| z[i] as f64, 40)?;

    let mut clips = ClipCounts::default();
    let mut clip_outcome = |v: f64| match range {
        Some(r) if !r.contains(v) => {
            clips.outcome += 1;
            r.clamp(v)
        }
        _ => v,
    };
    let mut values = Vec::with_capacity(test.len());
    let mut raw = Vec::with_capacity(test.len());
    for &i in &test {
        let x = table.row(i);
        let h = [clip_outcome(h_models[0].predict(x)), clip_outcome(h_models[1].predict(x))];
        let mut m = [[0.0; 2]; 2];
        for (dd, row) in m.iter_mut().enumerate() {
            for (zz, v) in row.iter_mut().enumerate() {
                *v = clip_outcome(m_models[dd][zz].as_ref().unwrap().predict(x));
            }
        }
        raw.push((h, m, [p_models[0].predict(x), p_models[1].predict(x)], z_model.predict(x)));
    }
    for (h, m, p, zh) in raw {
        let p = p.map(|v| {
            if (0.0..=1.0).contains(&v) {
                v
            } else {
                clips.treatment += 1;
                v.clamp(0.0, 1.0)
            }
        });
        let zhat = if zh < eta || zh > 1.0 - eta {
            clips.instrument += 1;
            zh.clamp(eta, 1.0 - eta)
        } else {
            zh
        };
        values.push(PointNuisance { h, m, p, zhat });
    }
    Ok(FoldFit { rows: test, values, clips })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nuisance::LearnerSpec;
    use rand::Rng;

    fn random_table(n: usize, seed: u64, range: Option<OutcomeRange>) -> ObservationTable {
        let mut rng = seeding::rng(seed, &[]);
        let mut x = Vec::new();
        let (mut y, mut d, mut z) = (vec![], vec![], vec![]);
        for _ in 0..n {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            let zz = (rng.gen::<f64>() < 0.5) as u8;
            let dd = if rng.gen::<f64>() < 0.2 { 1 - zz } else { zz };
            x.extend([a, b]);
            z.push(zz);
            d.push(dd);
            y.push((0.2 + 0.3 * a + 0.2 * dd as f64 + 0.1 * rng.gen::<f64>()).min(1.0));
        }
        ObservationTable::from_flat(y, d, z, x, 2, range).unwrap()
    }

    #[test]
    fn constant_outcome_gives_constant_regressions() {
        let t = random_table(300, 1, None);
        let t = t.with_outcomes(vec![0.7; 300]).unwrap();
        for spec in [LearnerSpec::boosted_stumps(), LearnerSpec::k_nearest(Some(7))] {
            let nu = crossfit(&t, &spec, 5, 0.01, 3).unwrap();
            for i in 0..t.n() {
                let r = nu.predict_at(i).unwrap();
                assert_eq!(r.h, [0.7; 2]);
                assert_eq!(r.m, [[0.7; 2]; 2]);
                assert_eq!(nu.observed_mean(i).unwrap(), 0.7);
            }
        }
    }

    #[test]
    fn poisoned_fold_keeps_its_own_predictions() {
        let t = random_table(400, 2, None);
        let spec = LearnerSpec::boosted(50, 0.1, 2);
        let base = crossfit(&t, &spec, 5, 0.01, 8).unwrap();
        let mut y = t.y().to_vec();
        for i in base.folds().members(3) {
            y[i] = 100.0 + i as f64;
        }
        let poisoned = crossfit(&t.with_outcomes(y).unwrap(), &spec, 5, 0.01, 8).unwrap();
        for i in base.folds().members(3) {
            assert_eq!(base.predict_at(i).unwrap(), poisoned.predict_at(i).unwrap());
        }
        let other = base.folds().members(0)[0];
        assert_ne!(base.predict_at(other).unwrap().h, poisoned.predict_at(other).unwrap().h);
    }

    #[test]
    fn balanced_instrument_propensity_near_half() {
        let t = random_table(10_000, 4, None);
        let nu = crossfit(&t, &LearnerSpec::boosted_stumps(), 5, 0.01, 1).unwrap();
        let mean = nu.rows().iter().map(|r| r.zhat).sum::<f64>() / t.n() as f64;
        assert!((mean - 0.5).abs() <= 0.01, "mean zhat {mean}");
        // default k ~ n^(2/3) neighbours: per-row sd about 0.025
        let nu = crossfit(&t, &LearnerSpec::k_nearest(None), 5, 0.01, 1).unwrap();
        for r in nu.rows() {
            assert!((r.zhat - 0.5).abs() <= 0.1, "zhat {}", r.zhat);
        }
    }

    #[test]
    fn probabilities_and_outcomes_in_range() {
        let t = random_table(500, 5, Some(OutcomeRange::unit()));
        let nu = crossfit(&t, &LearnerSpec::boosted(100, 0.3, 3), 4, 0.05, 1).unwrap();
        for r in nu.rows() {
            assert!((0.05..=0.95).contains(&r.zhat));
            assert!(r.p.iter().all(|p| (0.0..=1.0).contains(p)));
            assert!(r.h.iter().chain(r.m.iter().flatten()).all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn extreme_instrument_propensity_is_trimmed() {
        // Z = 1 for every row but one: zhat predictions sit near 1 and get trimmed
        let n = 60;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut z = vec![1u8; n];
        z[0] = 0;
        z[1] = 0;
        let d = z.clone();
        let t = ObservationTable::from_flat(vec![0.5; n], d, z, x, 1, None).unwrap();
        let nu = crossfit(&t, &LearnerSpec::k_nearest(Some(3)), 2, 0.1, 0);
        match nu {
            Ok(nu) => {
                assert!(nu.rows().iter().all(|r| r.zhat <= 0.9));
                assert!(nu.clip_counts().instrument > 0);
            }
            Err(e) => assert_eq!(e.exit_code(), 4),
        }
    }

    #[test]
    fn empty_instrument_arm_is_numerical_error() {
        let n = 20;
        let t = ObservationTable::from_flat(vec![0.5; n], vec![1; n], vec![1; n], vec![0.0; n], 1, None).unwrap();
        let err = crossfit(&t, &LearnerSpec::boosted_stumps(), 2, 0.01, 0).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn full_compliance_reuses_arm_regressions() {
        let t = random_table(400, 6, None);
        let t = ObservationTable::from_flat(t.y().to_vec(), t.z().to_vec(), t.z().to_vec(), t.x().to_vec(), 2, None)
            .unwrap();
        let nu = crossfit(&t, &LearnerSpec::boosted_stumps(), 5, 0.01, 2).unwrap();
        for r in nu.rows() {
            assert_eq!(r.p, [0.0, 1.0]);
            assert_eq!(r.m[1][1], r.h[1]);
            assert_eq!(r.m[0][0], r.h[0]);
        }
    }

    #[test]
    fn eta_validated() {
        let t = random_table(50, 7, None);
        assert!(crossfit(&t, &LearnerSpec::boosted_stumps(), 5, 0.0, 0).is_err());
        assert!(crossfit(&t, &LearnerSpec::boosted_stumps(), 5, 0.5, 0).is_err());
    }

    #[test]
    fn swap_instrument_is_involution() {
        let p = PointNuisance::from_cells([[0.1, 0.2], [0.3, 0.4]], [0.25, 0.75], 0.3);
        let back = p.swap_instrument().swap_instrument();
        assert_eq!((back.h, back.m, back.p), (p.h, p.m, p.p));
        assert!((back.zhat - p.zhat).abs() <= 1e-15);
        assert_eq!(p.theta(), [p.h[1], p.h[0], 0.3, 0.2, 0.75, 0.25]);
    }
}
