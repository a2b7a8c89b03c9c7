//! Per-unit scores for each decision criterion, in plug-in and
//! Neyman-orthogonal form.
//!
//! Every criterion's score has the shape
//! `Gamma = phi0 + sum_l a_l * phi_l * 1{phi_l >= 0}` with `a_l` in `{-1, 1}`
//! and `phi0`, `phi_l` linear in the bounds. The orthogonal score adds
//! influence-function adjustments to `phi0` and to each active `phi_l`, but
//! evaluates every indicator at the plug-in value.

use serde::{Deserialize, Serialize};

use crate::bounds::{
    outcome_forms, psi, BoundsEntry, BoundsEstimate, Envelope, Form, OutcomeBounds, Scheme, Slot, Weight,
};
use crate::error::{Error, Result};
use crate::model::{ObservationTable, OutcomeRange, Policy};
use crate::numfmt;
use crate::nuisance::{CrossFitNuisances, PointNuisance};

/// Decision criterion under ambiguity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", from = "CriterionRepr")]
pub enum Criterion {
    /// Maximize the worst-case welfare: score `y1_low - y0_low`.
    MaximinWelfare,
    /// Maximize the worst-case impact: score `tau_low`.
    MaximinImpact,
    /// Minimize the worst-case regret against the first-best rule.
    MinimaxRegret,
    /// Minimize the worst-case regret against a baseline policy.
    MinimaxRegretBaseline { baseline: Policy },
    /// Optimism-weighted welfare; `delta_d` weights the upper bound of `Y(d)`.
    HurwiczWelfare {
        #[serde(with = "numfmt::float")]
        delta0: f64,
        #[serde(with = "numfmt::float")]
        delta1: f64,
    },
    /// Optimism-weighted impact `delta * tau_high + (1 - delta) * tau_low`.
    HurwiczImpact {
        #[serde(with = "numfmt::float")]
        delta: f64,
    },
}

// Unit variants spelled as empty structs so stray keys are rejected.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum CriterionRepr {
    MaximinWelfare {},
    MaximinImpact {},
    MinimaxRegret {},
    MinimaxRegretBaseline {
        baseline: Policy,
    },
    HurwiczWelfare {
        #[serde(with = "numfmt::float")]
        delta0: f64,
        #[serde(with = "numfmt::float")]
        delta1: f64,
    },
    HurwiczImpact {
        #[serde(with = "numfmt::float")]
        delta: f64,
    },
}

impl From<CriterionRepr> for Criterion {
    fn from(r: CriterionRepr) -> Self {
        match r {
            CriterionRepr::MaximinWelfare {} => Criterion::MaximinWelfare,
            CriterionRepr::MaximinImpact {} => Criterion::MaximinImpact,
            CriterionRepr::MinimaxRegret {} => Criterion::MinimaxRegret,
            CriterionRepr::MinimaxRegretBaseline { baseline } => Criterion::MinimaxRegretBaseline { baseline },
            CriterionRepr::HurwiczWelfare { delta0, delta1 } => Criterion::HurwiczWelfare { delta0, delta1 },
            CriterionRepr::HurwiczImpact { delta } => Criterion::HurwiczImpact { delta },
        }
    }
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::MaximinWelfare => "maximin_welfare",
            Criterion::MaximinImpact => "maximin_impact",
            Criterion::MinimaxRegret => "minimax_regret",
            Criterion::MinimaxRegretBaseline { .. } => "minimax_regret_baseline",
            Criterion::HurwiczWelfare { .. } => "hurwicz_welfare",
            Criterion::HurwiczImpact { .. } => "hurwicz_impact",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{name} = {v} must lie in [0, 1]")))
            }
        };
        match self {
            Criterion::HurwiczWelfare { delta0, delta1 } => {
                unit("delta0", *delta0)?;
                unit("delta1", *delta1)
            }
            Criterion::HurwiczImpact { delta } => unit("delta", *delta),
            _ => Ok(()),
        }
    }

    pub fn needs_outcome_bounds(&self) -> bool {
        matches!(self, Criterion::MaximinWelfare | Criterion::HurwiczWelfare { .. })
    }

    /// The six criteria, with the given Hurwicz weights and baseline.
    pub fn all(baseline: Policy, delta: f64) -> Vec<Criterion> {
        vec![
            Criterion::MaximinWelfare,
            Criterion::MaximinImpact,
            Criterion::MinimaxRegret,
            Criterion::MinimaxRegretBaseline { baseline },
            Criterion::HurwiczWelfare { delta0: delta, delta1: delta },
            Criterion::HurwiczImpact { delta },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    PlugIn,
    Orthogonal,
}

impl ScoreMode {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMode::PlugIn => "plug_in",
            ScoreMode::Orthogonal => "orthogonal",
        }
    }
}

/// `phi0` and the signed kinked components of a criterion, evaluated on
/// one set of bound values. Linear in the bound values.
struct Parts {
    phi0: f64,
    components: Vec<(f64, i8)>,
}

fn outcome_bounds(b: &BoundsEntry, criterion: &Criterion) -> Result<OutcomeBounds> {
    b.y.ok_or_else(|| {
        Error::Invalid(format!("criterion {} needs outcome bounds, which this scheme does not produce", criterion.name()))
    })
}

fn parts(b: &BoundsEntry, criterion: &Criterion, baseline_treats: Option<bool>) -> Result<Parts> {
    let lin = |phi0| Parts { phi0, components: vec![] };
    Ok(match criterion {
        Criterion::MaximinWelfare => {
            let y = outcome_bounds(b, criterion)?;
            lin(y.y1_low - y.y0_low)
        }
        Criterion::MaximinImpact => lin(b.tau_low),
        Criterion::MinimaxRegret => Parts { phi0: 0.0, components: vec![(b.tau_high, 1), (-b.tau_low, -1)] },
        Criterion::MinimaxRegretBaseline { .. } => {
            let treats = baseline_treats.ok_or_else(|| Error::Invalid("baseline policy needs covariates".into()))?;
            lin(if treats { b.tau_high } else { b.tau_low })
        }
        Criterion::HurwiczWelfare { delta0, delta1 } => {
            let y = outcome_bounds(b, criterion)?;
            lin((delta1 * y.y1_high + (1.0 - delta1) * y.y1_low) - (delta0 * y.y0_high + (1.0 - delta0) * y.y0_low))
        }
        Criterion::HurwiczImpact { delta } => lin(delta * b.tau_high + (1.0 - delta) * b.tau_low),
    })
}

fn baseline_at(criterion: &Criterion, x: Option<&[f64]>) -> Result<Option<bool>> {
    match (criterion, x) {
        (Criterion::MinimaxRegretBaseline { baseline }, Some(x)) => {
            baseline.validate_for(x.len())?;
            Ok(Some(baseline.treats(x)))
        }
        (Criterion::MinimaxRegretBaseline { .. }, None) => {
            Err(Error::Invalid("baseline-regret score needs the unit's covariates".into()))
        }
        _ => Ok(None),
    }
}

/// Plug-in score of one unit. `x` is only read by the baseline-regret criterion.
pub fn plugin_score(b: &BoundsEntry, criterion: &Criterion, x: Option<&[f64]>) -> Result<f64> {
    criterion.validate()?;
    if !(b.tau_low.is_finite() && b.tau_high.is_finite()) {
        return Err(Error::Invalid("bounds must be finite".into()));
    }
    let p = parts(b, criterion, baseline_at(criterion, x)?)?;
    let mut g = p.phi0;
    for (phi, a) in p.components {
        if phi >= 0.0 {
            g += a as f64 * phi;
        }
    }
    Ok(g)
}

/// One observation's `(Y, D, Z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub d: u8,
    pub z: u8,
}

impl Observation {
    fn swapped(self) -> Self {
        Observation { z: 1 - self.z, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Upper,
    Lower,
}

/// Influence adjustment for a Balke-Pearl effect bound:
/// `alpha[0] (Y - h(Z)) + alpha[1] (Y - m(D,Z)) + alpha[2] (D - p(Z))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfluenceAdjustment {
    pub alpha: [f64; 3],
    pub residuals: [f64; 3],
    pub terms: [f64; 3],
    pub total: f64,
}

pub fn influence_adjust_balke_pearl(
    obs: &Observation,
    theta: &PointNuisance,
    zhat: f64,
    range: &OutcomeRange,
    which: BoundSide,
) -> Result<InfluenceAdjustment> {
    if !(zhat > 0.0 && zhat < 1.0) {
        return Err(Error::Invalid(format!("instrument propensity {zhat} outside (0, 1)")));
    }
    let (z, d) = (obs.z as f64, obs.d as f64);
    let (zi, di) = (obs.z as usize, obs.d as usize);
    let (near, far) = match which {
        BoundSide::Upper => (range.y_low, range.y_high),
        BoundSide::Lower => (range.y_high, range.y_low),
    };
    let on = z / zhat;
    let off = (1.0 - z) / (1.0 - zhat);
    let alpha = [
        on - off,
        d * off - (1.0 - d) * on,
        (theta.m[1][0] - near) * off - (far - theta.m[0][1]) * on,
    ];
    let residuals = [obs.y - theta.h[zi], obs.y - theta.m[di][zi], d - theta.p[zi]];
    let terms = [alpha[0] * residuals[0], alpha[1] * residuals[1], alpha[2] * residuals[2]];
    Ok(InfluenceAdjustment { alpha, residuals, terms, total: terms[0] + terms[1] + terms[2] })
}

/// Influence adjustment of `psi(z', d'; yb)`.
fn psi_adjustment(obs: &Observation, theta: &PointNuisance, z: usize, d: usize, yb: f64) -> f64 {
    if obs.z as usize != z {
        return 0.0;
    }
    let pz = if z == 1 { theta.zhat } else { 1.0 - theta.zhat };
    let ind = (obs.d as usize == d) as u8 as f64;
    let pd = if d == 1 { theta.p[z] } else { 1.0 - theta.p[z] };
    let m = theta.m[d][z];
    (ind * (obs.y - m) + (m - yb) * (ind - pd)) / pz
}

fn form_adjustment(form: &Form, obs: &Observation, theta: &PointNuisance) -> f64 {
    let (o, t) = if form.swapped { (obs.swapped(), theta.swap_instrument()) } else { (*obs, *theta) };
    let zres = o.z as f64 - t.zhat;
    let mut total = 0.0;
    for k in &form.terms {
        let a = psi_adjustment(&o, &t, k.z, k.d, k.yb);
        total += match k.weight {
            Weight::One => a,
            Weight::Zhat => t.zhat * a + psi(&t, k.z, k.d, k.yb) * zres,
            Weight::OneMinusZhat => (1.0 - t.zhat) * a - psi(&t, k.z, k.d, k.yb) * zres,
        };
    }
    total
}

/// Influence adjustment of the Wald ratio.
pub fn influence_adjust_late(obs: &Observation, theta: &PointNuisance, late: f64) -> f64 {
    let (z, zi) = (obs.z as f64, obs.z as usize);
    let alpha = z / theta.zhat - (1.0 - z) / (1.0 - theta.zhat);
    let first_stage = theta.p[1] - theta.p[0];
    (alpha * (obs.y - theta.h[zi]) - late * alpha * (obs.d as f64 - theta.p[zi])) / first_stage
}

/// Orthogonalized bounds of one unit: `orthogonal = plugin + adjustment`
/// slot by slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthogonalBounds {
    pub adjustment: BoundsEntry,
    pub orthogonal: BoundsEntry,
}

/// Adds influence adjustments to a unit's plug-in bounds.
///
/// Balke-Pearl effect bounds use the explicit adjustment of
/// [`influence_adjust_balke_pearl`]. Outcome bounds (and Manski /
/// Manski-Pepper effect bounds, which are differences of them) adjust only
/// the argument selected by each min/max at the plug-in values.
pub fn orthogonal_bounds(
    obs: &Observation,
    theta: &PointNuisance,
    plugin: &BoundsEntry,
    envelopes: &[Envelope],
    range: &OutcomeRange,
    scheme: &Scheme,
) -> Result<OrthogonalBounds> {
    let (y_adj, tau_low, tau_high) = match scheme {
        Scheme::PointLate { .. } => {
            let a = influence_adjust_late(obs, theta, plugin.tau_low);
            (None, a, a)
        }
        _ => {
            let forms = outcome_forms(scheme, range, envelopes)?;
            let mut y = OutcomeBounds { y0_low: 0.0, y0_high: 0.0, y1_low: 0.0, y1_high: 0.0 };
            for (slot, form) in Slot::ALL.iter().zip(&forms) {
                y.set(*slot, form_adjustment(form, obs, theta));
            }
            let (lo, hi) = if let Scheme::BalkePearl = scheme {
                (
                    influence_adjust_balke_pearl(obs, theta, theta.zhat, range, BoundSide::Lower)?.total,
                    influence_adjust_balke_pearl(obs, theta, theta.zhat, range, BoundSide::Upper)?.total,
                )
            } else {
                (y.y1_low - y.y0_high, y.y1_high - y.y0_low)
            };
            (Some(y), lo, hi)
        }
    };
    let adjustment = BoundsEntry { y: y_adj, tau_low, tau_high };
    let orthogonal = BoundsEntry {
        y: match (plugin.y, y_adj) {
            (Some(p), Some(a)) => Some(OutcomeBounds {
                y0_low: p.y0_low + a.y0_low,
                y0_high: p.y0_high + a.y0_high,
                y1_low: p.y1_low + a.y1_low,
                y1_high: p.y1_high + a.y1_high,
            }),
            _ => None,
        },
        tau_low: plugin.tau_low + tau_low,
        tau_high: plugin.tau_high + tau_high,
    };
    Ok(OrthogonalBounds { adjustment, orthogonal })
}

/// One kinked component `a * phi * 1{phi >= 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreComponent {
    pub sign: i8,
    #[serde(with = "numfmt::float")]
    pub plugin: f64,
    #[serde(with = "numfmt::float")]
    pub adjustment: f64,
    /// `1{plugin >= 0}`, shared by both modes.
    pub active: bool,
}

/// A unit's score in both modes with its decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitScore {
    #[serde(with = "numfmt::float")]
    pub gamma_plugin: f64,
    #[serde(with = "numfmt::float")]
    pub gamma_orthogonal: f64,
    #[serde(with = "numfmt::float")]
    pub phi0_plugin: f64,
    #[serde(with = "numfmt::float")]
    pub phi0_adjustment: f64,
    pub components: Vec<ScoreComponent>,
    /// `phi0_adjustment + sum of sign * adjustment over active components`;
    /// `gamma_orthogonal = gamma_plugin + adjustment_total`.
    #[serde(with = "numfmt::float")]
    pub adjustment_total: f64,
}

impl UnitScore {
    pub fn gamma(&self, mode: ScoreMode) -> f64 {
        match mode {
            ScoreMode::PlugIn => self.gamma_plugin,
            ScoreMode::Orthogonal => self.gamma_orthogonal,
        }
    }

    /// Recomputes `phi0 + sum a * phi * 1{.}` from the stored components.
    pub fn reconstruct(&self, mode: ScoreMode) -> f64 {
        let orth = mode == ScoreMode::Orthogonal;
        let mut g = self.phi0_plugin + if orth { self.phi0_adjustment } else { 0.0 };
        for c in &self.components {
            if c.active {
                g += c.sign as f64 * (c.plugin + if orth { c.adjustment } else { 0.0 });
            }
        }
        g
    }
}

/// Combines plug-in bounds and their adjustments into a unit score.
pub fn orthogonal_score(
    plugin: &BoundsEntry,
    orth: &OrthogonalBounds,
    criterion: &Criterion,
    x: Option<&[f64]>,
) -> Result<UnitScore> {
    criterion.validate()?;
    let base = baseline_at(criterion, x)?;
    let p = parts(plugin, criterion, base)?;
    let a = parts(&orth.adjustment, criterion, base)?;
    let mut gamma_plugin = p.phi0;
    let mut adjustment_total = a.phi0;
    let mut components = Vec::with_capacity(p.components.len());
    for (&(phi, sign), &(adj, _)) in p.components.iter().zip(&a.components) {
        let active = phi >= 0.0;
        if active {
            gamma_plugin += sign as f64 * phi;
            adjustment_total += sign as f64 * adj;
        }
        components.push(ScoreComponent { sign, plugin: phi, adjustment: adj, active });
    }
    Ok(UnitScore {
        gamma_plugin,
        gamma_orthogonal: gamma_plugin + adjustment_total,
        phi0_plugin: p.phi0,
        phi0_adjustment: a.phi0,
        components,
        adjustment_total,
    })
}

/// Scores for a whole sample. Both modes are kept; `mode` picks which one
/// [`ScoreVector::gamma`] returns.
#[derive(Debug, Clone)]
pub struct ScoreVector {
    pub criterion: Criterion,
    pub scheme: Scheme,
    pub mode: ScoreMode,
    pub units: Vec<UnitScore>,
    pub adjustments: Vec<BoundsEntry>,
}

impl ScoreVector {
    pub fn n(&self) -> usize {
        self.units.len()
    }

    pub fn gamma(&self) -> Vec<f64> {
        self.gamma_for(self.mode)
    }

    pub fn gamma_for(&self, mode: ScoreMode) -> Vec<f64> {
        self.units.iter().map(|u| u.gamma(mode)).collect()
    }

    pub fn with_mode(mut self, mode: ScoreMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Scores from already computed bounds.
pub fn scores_from_bounds(
    table: &ObservationTable,
    bounds: &BoundsEstimate,
    criterion: &Criterion,
    mode: ScoreMode,
) -> Result<ScoreVector> {
    criterion.validate()?;
    if bounds.n() != table.n() {
        return Err(Error::Invalid(format!("{} bound rows for {} observations", bounds.n(), table.n())));
    }
    if criterion.needs_outcome_bounds() && !bounds.scheme.has_outcome_bounds() {
        return Err(Error::Invalid(format!(
            "criterion {} needs outcome bounds, which scheme {} does not produce",
            criterion.name(),
            bounds.scheme.name()
        )));
    }
    let mut units = Vec::with_capacity(table.n());
    let mut adjustments = Vec::with_capacity(table.n());
    for i in 0..table.n() {
        let obs = Observation { y: table.y()[i], d: table.d()[i], z: table.z()[i] };
        let plugin = &bounds.entries[i];
        let orth = orthogonal_bounds(&obs, &bounds.thetas[i], plugin, &bounds.selections[i], &bounds.range, &bounds.scheme)?;
        units.push(orthogonal_score(plugin, &orth, criterion, Some(table.row(i)))?);
        adjustments.push(orth.adjustment);
    }
    Ok(ScoreVector { criterion: criterion.clone(), scheme: bounds.scheme, mode, units, adjustments })
}

/// Bounds then scores for every unit, from cross-fitted nuisances.
pub fn build_scores(
    table: &ObservationTable,
    nuisances: &CrossFitNuisances,
    scheme: &Scheme,
    range: &OutcomeRange,
    criterion: &Criterion,
    mode: ScoreMode,
) -> Result<ScoreVector> {
    let bounds = crate::bounds::compute_bounds(table, nuisances, scheme, range)?;
    scores_from_bounds(table, &bounds, criterion, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::unit_bounds;
    use crate::model::Side;
    use crate::seeding;
    use rand::Rng;

    fn tau(lo: f64, hi: f64) -> BoundsEntry {
        BoundsEntry { y: None, tau_low: lo, tau_high: hi }
    }

    #[test]
    fn table_one_hand_values() {
        let s = |b: &BoundsEntry, c: &Criterion| plugin_score(b, c, Some(&[0.0])).unwrap();
        assert_eq!(s(&tau(-1.0, 2.0), &Criterion::MinimaxRegret), 1.0);
        assert_eq!(s(&tau(-1.0, 1.0), &Criterion::MinimaxRegret), 0.0);
        assert_eq!(s(&tau(0.1, 0.5), &Criterion::MinimaxRegret), 0.5);
        assert_eq!(s(&tau(-0.7, -0.2), &Criterion::MinimaxRegret), -0.7);
        assert_eq!(s(&tau(-2.0, 2.0), &Criterion::HurwiczImpact { delta: 0.25 }), -1.0);
        assert_eq!(s(&tau(-2.0, 2.0), &Criterion::MaximinImpact), -2.0);
        let y = OutcomeBounds { y0_low: 0.5, y0_high: 0.9, y1_low: 0.3, y1_high: 0.8 };
        let b = BoundsEntry { y: Some(y), tau_low: -0.6, tau_high: 0.3 };
        assert!((s(&b, &Criterion::MaximinWelfare) + 0.2).abs() < 1e-15);
        let hw = s(&b, &Criterion::HurwiczWelfare { delta0: 0.5, delta1: 1.0 });
        assert!((hw - (0.8 - 0.7)).abs() < 1e-15);
    }

    #[test]
    fn baseline_regret_follows_baseline_policy() {
        let base = Policy::quadrant([0, 0], [0.5, f64::INFINITY], [Side::AtMost, Side::AtMost]);
        let c = Criterion::MinimaxRegretBaseline { baseline: base };
        assert_eq!(plugin_score(&tau(-1.0, 2.0), &c, Some(&[0.2])).unwrap(), 2.0);
        assert_eq!(plugin_score(&tau(-1.0, 2.0), &c, Some(&[0.7])).unwrap(), -1.0);
        assert!(plugin_score(&tau(-1.0, 2.0), &c, None).is_err());
    }

    #[test]
    fn welfare_criteria_need_outcome_bounds() {
        assert!(plugin_score(&tau(0.0, 1.0), &Criterion::MaximinWelfare, None).is_err());
        assert!(Criterion::HurwiczImpact { delta: 1.5 }.validate().is_err());
    }

    #[test]
    fn alpha_one_hand_values() {
        let t = PointNuisance::from_cells([[0.5; 2]; 2], [0.2, 0.7], 0.5);
        let r = OutcomeRange::unit();
        let up = |z| influence_adjust_balke_pearl(&Observation { y: 0.5, d: 1, z }, &t, 0.5, &r, BoundSide::Upper).unwrap();
        assert_eq!(up(1).alpha[0], 2.0);
        assert_eq!(up(0).alpha[0], -2.0);
        assert_eq!(up(0).alpha[1], 2.0);
        let low = influence_adjust_balke_pearl(&Observation { y: 0.5, d: 0, z: 1 }, &t, 0.5, &r, BoundSide::Lower).unwrap();
        assert_eq!(low.alpha[1], -2.0);
        // alpha3 at z=1 for the lower bound: -(Y_L - m01) / zhat
        assert_eq!(low.alpha[2], -(0.0 - 0.5) / 0.5);
    }

    fn degenerate_zero_residual_theta(obs: &Observation) -> PointNuisance {
        // nuisances that reproduce the observation exactly in its own cell
        let mut m = [[0.3, 0.6], [0.4, 0.8]];
        m[obs.d as usize][obs.z as usize] = obs.y;
        let mut p = [0.0, 1.0];
        p[obs.z as usize] = obs.d as f64;
        let mut t = PointNuisance::from_cells(m, p, 0.5);
        t.h[obs.z as usize] = obs.y;
        t
    }

    #[test]
    fn zero_residuals_give_zero_adjustments() {
        let r = OutcomeRange::unit();
        for (d, z) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
            let obs = Observation { y: 0.625, d, z };
            let t = degenerate_zero_residual_theta(&obs);
            for side in [BoundSide::Upper, BoundSide::Lower] {
                assert_eq!(influence_adjust_balke_pearl(&obs, &t, 0.5, &r, side).unwrap().total, 0.0);
            }
            for scheme in [Scheme::BalkePearl, Scheme::Manski, Scheme::ManskiPepper { reversed: false }] {
                let (b, env) = unit_bounds(&t, &scheme, &r).unwrap();
                let o = orthogonal_bounds(&obs, &t, &b, &env, &r, &scheme).unwrap();
                // Manski-type outcome bounds carry a zhat-weight term that
                // vanishes only when psi terms do not depend on zhat
                if !matches!(scheme, Scheme::ManskiPepper { .. }) {
                    assert_eq!(o.orthogonal, b, "{scheme:?} d={d} z={z}");
                }
                for c in Criterion::all(Policy::treat_all(1), 0.3) {
                    let u = orthogonal_score(&b, &o, &c, Some(&[0.0])).unwrap();
                    if !matches!(scheme, Scheme::ManskiPepper { .. }) {
                        assert_eq!(u.gamma_orthogonal, u.gamma_plugin);
                    }
                    assert_eq!(u.gamma_plugin, plugin_score(&b, &c, Some(&[0.0])).unwrap());
                }
            }
        }
    }

    #[test]
    fn decomposition_reconstructs_and_indicators_shared() {
        let mut rng = seeding::rng(3, &[]);
        let r = OutcomeRange::unit();
        for _ in 0..2000 {
            let t = PointNuisance::from_cells(
                [[rng.gen(), rng.gen()], [rng.gen(), rng.gen()]],
                [rng.gen(), rng.gen()],
                rng.gen_range(0.1..0.9),
            );
            let obs = Observation { y: rng.gen(), d: rng.gen_range(0..2), z: rng.gen_range(0..2) };
            for scheme in [Scheme::BalkePearl, Scheme::Manski, Scheme::ManskiPepper { reversed: true }] {
                let (b, env) = unit_bounds(&t, &scheme, &r).unwrap();
                let o = orthogonal_bounds(&obs, &t, &b, &env, &r, &scheme).unwrap();
                for c in Criterion::all(Policy::treat_none(1), 0.4) {
                    let u = orthogonal_score(&b, &o, &c, Some(&[0.5])).unwrap();
                    assert_eq!(u.gamma_plugin, plugin_score(&b, &c, Some(&[0.5])).unwrap());
                    assert_eq!(u.gamma_orthogonal, u.gamma_plugin + u.adjustment_total);
                    for mode in [ScoreMode::PlugIn, ScoreMode::Orthogonal] {
                        assert!((u.reconstruct(mode) - u.gamma(mode)).abs() <= 1e-12);
                    }
                    for comp in &u.components {
                        assert_eq!(comp.active, comp.plugin >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn single_active_component_when_sign_identified() {
        let b = tau(0.1, 0.5);
        let o = OrthogonalBounds { adjustment: tau(0.03, -0.2), orthogonal: tau(0.13, 0.3) };
        let u = orthogonal_score(&b, &o, &Criterion::MinimaxRegret, None).unwrap();
        assert_eq!(u.gamma_orthogonal, 0.5 + -0.2);
        assert_eq!(u.components.iter().filter(|c| c.active).count(), 1);
    }
}
