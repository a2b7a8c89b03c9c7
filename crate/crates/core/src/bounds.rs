//! Per-unit identified sets for the potential-outcome means and the CATE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ObservationTable, OutcomeRange};
use crate::numfmt;
use crate::nuisance::{CrossFitNuisances, PointNuisance};

/// Identification scheme for the CATE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", from = "SchemeRepr")]
pub enum Scheme {
    /// Bounded outcomes and an instrument independent of potential outcomes.
    Manski,
    /// Manski's assumptions plus monotone compliance (no defiers).
    BalkePearl,
    /// Monotone instrument: `E[Y(d) | Z=0, X] <= E[Y(d) | Z=1, X]`.
    /// `reversed` flips the inequality.
    ManskiPepper {
        #[serde(default)]
        reversed: bool,
    },
    /// Point-identified local average treatment effect; both bounds equal it.
    PointLate {
        #[serde(default = "default_epsilon", with = "numfmt::float")]
        epsilon: f64,
    },
}

// Unit variants spelled as empty structs so stray keys are rejected.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SchemeRepr {
    Manski {},
    BalkePearl {},
    ManskiPepper {
        #[serde(default)]
        reversed: bool,
    },
    PointLate {
        #[serde(default = "default_epsilon", with = "numfmt::float")]
        epsilon: f64,
    },
}

impl From<SchemeRepr> for Scheme {
    fn from(r: SchemeRepr) -> Self {
        match r {
            SchemeRepr::Manski {} => Scheme::Manski,
            SchemeRepr::BalkePearl {} => Scheme::BalkePearl,
            SchemeRepr::ManskiPepper { reversed } => Scheme::ManskiPepper { reversed },
            SchemeRepr::PointLate { epsilon } => Scheme::PointLate { epsilon },
        }
    }
}

pub const DEFAULT_EPSILON_LATE: f64 = 0.05;

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON_LATE
}

impl Scheme {
    pub fn point_late() -> Self {
        Scheme::PointLate { epsilon: DEFAULT_EPSILON_LATE }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Manski => "manski",
            Scheme::BalkePearl => "balke_pearl",
            Scheme::ManskiPepper { reversed: false } => "manski_pepper",
            Scheme::ManskiPepper { reversed: true } => "manski_pepper_reversed",
            Scheme::PointLate { .. } => "point_late",
        }
    }

    /// Whether the scheme bounds `E[Y(0)|X]` and `E[Y(1)|X]` separately.
    pub fn has_outcome_bounds(&self) -> bool {
        !matches!(self, Scheme::PointLate { .. })
    }
}

/// Bounds on `E[Y(0)|X]` and `E[Y(1)|X]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeBounds {
    #[serde(with = "numfmt::float")]
    pub y0_low: f64,
    #[serde(with = "numfmt::float")]
    pub y0_high: f64,
    #[serde(with = "numfmt::float")]
    pub y1_low: f64,
    #[serde(with = "numfmt::float")]
    pub y1_high: f64,
}

impl OutcomeBounds {
    pub fn get(&self, slot: Slot) -> f64 {
        match slot {
            Slot::Y0Low => self.y0_low,
            Slot::Y0High => self.y0_high,
            Slot::Y1Low => self.y1_low,
            Slot::Y1High => self.y1_high,
        }
    }

    pub fn set(&mut self, slot: Slot, v: f64) {
        match slot {
            Slot::Y0Low => self.y0_low = v,
            Slot::Y0High => self.y0_high = v,
            Slot::Y1Low => self.y1_low = v,
            Slot::Y1High => self.y1_high = v,
        }
    }
}

/// One unit's bounds. `y` is absent for the point-LATE comparator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsEntry {
    pub y: Option<OutcomeBounds>,
    #[serde(with = "numfmt::float")]
    pub tau_low: f64,
    #[serde(with = "numfmt::float")]
    pub tau_high: f64,
}

/// The four outcome-mean bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Y0Low,
    Y0High,
    Y1Low,
    Y1High,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::Y0Low, Slot::Y0High, Slot::Y1Low, Slot::Y1High];

    pub fn name(self) -> &'static str {
        match self {
            Slot::Y0Low => "y0_low",
            Slot::Y0High => "y0_high",
            Slot::Y1Low => "y1_low",
            Slot::Y1High => "y1_high",
        }
    }

    fn arm(self) -> usize {
        match self {
            Slot::Y0Low | Slot::Y0High => 0,
            Slot::Y1Low | Slot::Y1High => 1,
        }
    }

    fn is_upper(self) -> bool {
        matches!(self, Slot::Y0High | Slot::Y1High)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeOp {
    Min,
    Max,
}

/// A two-argument min or max inside one outcome bound.
///
/// `candidates` are listed in the order of the formula's arguments and
/// `instrument[j]` is the instrument value whose arm defines candidate `j`.
/// Ties select the lower argument index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub slot: Slot,
    pub op: EnvelopeOp,
    #[serde(with = "numfmt::float_pair")]
    pub candidates: [f64; 2],
    pub instrument: [u8; 2],
    pub selected: usize,
}

impl Envelope {
    fn new(slot: Slot, op: EnvelopeOp, candidates: [f64; 2], instrument: [u8; 2]) -> Self {
        let selected = match op {
            EnvelopeOp::Min => (candidates[1] < candidates[0]) as usize,
            EnvelopeOp::Max => (candidates[1] > candidates[0]) as usize,
        };
        Envelope { slot, op, candidates, instrument, selected }
    }

    pub fn value(&self) -> f64 {
        self.candidates[self.selected]
    }

    pub fn selected_instrument(&self) -> u8 {
        self.instrument[self.selected]
    }

    /// Whether the recorded selection attains the extremum of the candidates.
    pub fn is_consistent(&self) -> bool {
        let other = self.candidates[1 - self.selected];
        match self.op {
            EnvelopeOp::Min => self.value() <= other,
            EnvelopeOp::Max => self.value() >= other,
        }
    }

    pub fn is_tie(&self) -> bool {
        self.candidates[0] == self.candidates[1]
    }
}

/// `psi(z, d; yb) = m(d,z) P(D=d | Z=z) + yb P(D=1-d | Z=z)`: the mean of
/// `Y(d)` in arm `z` with the unobserved part replaced by `yb`.
pub fn psi(theta: &PointNuisance, z: usize, d: usize, yb: f64) -> f64 {
    let p = theta.p[z];
    if d == 1 {
        theta.m[1][z] * p + yb * (1.0 - p)
    } else {
        theta.m[0][z] * (1.0 - p) + yb * p
    }
}

fn check_theta(theta: &PointNuisance, range: &OutcomeRange) -> Result<()> {
    range.validate()?;
    let means = theta.h.iter().chain(theta.m.iter().flatten());
    if let Some(v) = means.clone().find(|v| !range.contains(**v)) {
        return Err(Error::Invalid(format!(
            "conditional mean {v} outside outcome range [{}, {}]",
            range.y_low, range.y_high
        )));
    }
    if let Some(p) = theta.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Invalid(format!("treatment probability {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_zhat(zhat: f64) -> Result<()> {
    if zhat > 0.0 && zhat < 1.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("instrument propensity {zhat} outside (0, 1)")))
    }
}

/// Bounds under monotone compliance.
pub fn balke_pearl_bounds(theta: &PointNuisance, range: &OutcomeRange) -> Result<BoundsEntry> {
    check_theta(theta, range)?;
    let (yl, yu) = (range.y_low, range.y_high);
    let [h1, h0, m10, m01, p1, p0] = theta.theta();
    let y = OutcomeBounds {
        y0_low: psi(theta, 0, 0, yl),
        y0_high: psi(theta, 0, 0, yu),
        y1_low: psi(theta, 1, 1, yl),
        y1_high: psi(theta, 1, 1, yu),
    };
    let tau_high = h1 - h0 + p0 * (m10 - yl) + (1.0 - p1) * (yu - m01);
    let tau_low = h1 - h0 + p0 * (m10 - yu) + (1.0 - p1) * (yl - m01);
    Ok(BoundsEntry { y: Some(y), tau_low, tau_high })
}

/// Intersection bounds over the two instrument arms.
pub fn manski_bounds(theta: &PointNuisance, range: &OutcomeRange) -> Result<(BoundsEntry, Vec<Envelope>)> {
    check_theta(theta, range)?;
    let (yl, yu) = (range.y_low, range.y_high);
    let env = |slot: Slot| {
        let (d, yb, op) = match slot {
            Slot::Y0Low => (0, yl, EnvelopeOp::Max),
            Slot::Y0High => (0, yu, EnvelopeOp::Min),
            Slot::Y1Low => (1, yl, EnvelopeOp::Max),
            Slot::Y1High => (1, yu, EnvelopeOp::Min),
        };
        Envelope::new(slot, op, [psi(theta, 0, d, yb), psi(theta, 1, d, yb)], [0, 1])
    };
    let envelopes: Vec<Envelope> = Slot::ALL.iter().map(|&s| env(s)).collect();
    let y = OutcomeBounds {
        y0_low: envelopes[0].value(),
        y0_high: envelopes[1].value(),
        y1_low: envelopes[2].value(),
        y1_high: envelopes[3].value(),
    };
    let entry = BoundsEntry { y: Some(y), tau_low: y.y1_low - y.y0_high, tau_high: y.y1_high - y.y0_low };
    Ok((entry, envelopes))
}

/// Monotone-instrument bounds.
///
/// Under `E[Y(d)|Z=0] <= E[Y(d)|Z=1]` the upper bound for arm 0 may borrow
/// the arm-1 upper bound and the lower bound for arm 1 may borrow the arm-0
/// lower bound; arm means are then averaged with weights `zhat`, `1 - zhat`.
/// Upper envelopes use `Y_U` throughout and lower envelopes `Y_L`.
pub fn manski_pepper_bounds(
    theta: &PointNuisance,
    zhat: f64,
    range: &OutcomeRange,
    reversed: bool,
) -> Result<(BoundsEntry, Vec<Envelope>)> {
    check_theta(theta, range)?;
    check_zhat(zhat)?;
    let (t, zz, lab) = if reversed {
        (theta.swap_instrument(), 1.0 - zhat, [1u8, 0])
    } else {
        (*theta, zhat, [0u8, 1])
    };
    let (yl, yu) = (range.y_low, range.y_high);
    // `lab[z]` maps the working label back to the caller's instrument value
    let inner = |slot: Slot| {
        let d = slot.arm();
        if slot.is_upper() {
            Envelope::new(slot, EnvelopeOp::Min, [psi(&t, 0, d, yu), psi(&t, 1, d, yu)], lab)
        } else {
            Envelope::new(slot, EnvelopeOp::Max, [psi(&t, 0, d, yl), psi(&t, 1, d, yl)], lab)
        }
    };
    let envelopes: Vec<Envelope> = Slot::ALL.iter().map(|&s| inner(s)).collect();
    let y0_low = zz * envelopes[0].value() + (1.0 - zz) * psi(&t, 0, 0, yl);
    let y0_high = zz * psi(&t, 1, 0, yu) + (1.0 - zz) * envelopes[1].value();
    let y1_low = zz * envelopes[2].value() + (1.0 - zz) * psi(&t, 0, 1, yl);
    let y1_high = zz * psi(&t, 1, 1, yu) + (1.0 - zz) * envelopes[3].value();
    let y = OutcomeBounds { y0_low, y0_high, y1_low, y1_high };
    let entry = BoundsEntry { y: Some(y), tau_low: y1_low - y0_high, tau_high: y1_high - y0_low };
    Ok((entry, envelopes))
}

/// Wald ratio `(h1 - h0) / (p1 - p0)`.
pub fn point_late(theta: &PointNuisance, epsilon: f64) -> Result<f64> {
    let first_stage = theta.p[1] - theta.p[0];
    if first_stage.abs() < epsilon || !first_stage.is_finite() {
        return Err(Error::Numerical(format!(
            "first stage p1 - p0 = {first_stage} is below epsilon {epsilon}"
        )));
    }
    Ok((theta.h[1] - theta.h[0]) / first_stage)
}

/// Weight multiplying a `psi` term inside an outcome bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Weight {
    One,
    Zhat,
    OneMinusZhat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PsiTerm {
    pub weight: Weight,
    pub z: usize,
    pub d: usize,
    pub yb: f64,
}

/// An outcome bound with every min/max resolved to its selected argument:
/// a weighted sum of `psi` terms. `swapped` marks terms written in the
/// relabelled instrument of a reversed monotone-instrument scheme.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Form {
    pub terms: Vec<PsiTerm>,
    pub swapped: bool,
}

/// Resolved forms of the four outcome bounds, ordered as [`Slot::ALL`].
pub(crate) fn outcome_forms(scheme: &Scheme, range: &OutcomeRange, envelopes: &[Envelope]) -> Result<Vec<Form>> {
    let (yl, yu) = (range.y_low, range.y_high);
    let bound = |slot: Slot| if slot.is_upper() { yu } else { yl };
    let one = |z: usize, slot: Slot| PsiTerm { weight: Weight::One, z, d: slot.arm(), yb: bound(slot) };
    let selected = |slot: Slot| -> Result<usize> {
        envelopes
            .iter()
            .find(|e| e.slot == slot)
            .map(|e| e.selected)
            .ok_or_else(|| Error::Invalid(format!("missing envelope selection for {}", slot.name())))
    };
    match scheme {
        Scheme::BalkePearl => Ok(Slot::ALL
            .iter()
            .map(|&s| Form { terms: vec![one(s.arm(), s)], swapped: false })
            .collect()),
        Scheme::Manski => Slot::ALL
            .iter()
            .map(|&s| Ok(Form { terms: vec![one(selected(s)?, s)], swapped: false }))
            .collect(),
        Scheme::ManskiPepper { reversed } => Slot::ALL
            .iter()
            .map(|&s| {
                let sel = selected(s)?;
                let with = |w: Weight, z: usize| PsiTerm { weight: w, ..one(z, s) };
                // the arm that borrows from the other: 0 for upper bounds, 1 for lower
                let terms = if s.is_upper() {
                    vec![with(Weight::Zhat, 1), with(Weight::OneMinusZhat, sel)]
                } else {
                    vec![with(Weight::Zhat, sel), with(Weight::OneMinusZhat, 0)]
                };
                Ok(Form { terms, swapped: *reversed })
            })
            .collect(),
        Scheme::PointLate { .. } => Err(Error::Invalid("point LATE has no outcome bounds".into())),
    }
}

/// Per-unit bounds for a whole sample.
#[derive(Debug, Clone)]
pub struct BoundsEstimate {
    pub scheme: Scheme,
    pub range: OutcomeRange,
    pub entries: Vec<BoundsEntry>,
    /// Envelope selections per unit (empty for Balke-Pearl and point LATE).
    pub selections: Vec<Vec<Envelope>>,
    /// Nuisance values after clipping, as used for each unit.
    pub thetas: Vec<PointNuisance>,
    /// Number of nuisance values clipped into range before evaluation.
    pub clip_count: usize,
    /// Constant subtracted from the treated-outcome and effect bounds.
    pub offset: f64,
}

impl BoundsEstimate {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// Subtracts a per-unit cost `c` of treatment: every `Y(1)` bound and both
    /// effect bounds move down by `c`.
    pub fn with_offset(mut self, c: f64) -> Self {
        for e in &mut self.entries {
            e.tau_low -= c;
            e.tau_high -= c;
            if let Some(y) = &mut e.y {
                y.y1_low -= c;
                y.y1_high -= c;
            }
        }
        self.offset += c;
        self
    }

    /// Number of min/max operators whose two arguments were exactly equal.
    pub fn tie_count(&self) -> usize {
        self.selections.iter().flatten().filter(|e| e.is_tie()).count()
    }
}

/// Clips nuisances into valid ranges: means to the outcome range,
/// treatment probabilities to `[0, 1]`, instrument propensity to `[eta, 1-eta]`.
pub fn clip_theta(theta: &PointNuisance, range: &OutcomeRange, eta: f64) -> (PointNuisance, usize) {
    let mut n = 0;
    let mut clip = |v: f64, lo: f64, hi: f64| {
        if v < lo || v > hi {
            n += 1;
            v.clamp(lo, hi)
        } else {
            v
        }
    };
    let (yl, yu) = (range.y_low, range.y_high);
    let h = theta.h.map(|v| clip(v, yl, yu));
    let m = theta.m.map(|r| r.map(|v| clip(v, yl, yu)));
    let p = theta.p.map(|v| clip(v, 0.0, 1.0));
    let zhat = clip(theta.zhat, eta, 1.0 - eta);
    (PointNuisance { h, m, p, zhat }, n)
}

pub fn unit_bounds(theta: &PointNuisance, scheme: &Scheme, range: &OutcomeRange) -> Result<(BoundsEntry, Vec<Envelope>)> {
    match scheme {
        Scheme::BalkePearl => Ok((balke_pearl_bounds(theta, range)?, vec![])),
        Scheme::Manski => manski_bounds(theta, range),
        Scheme::ManskiPepper { reversed } => manski_pepper_bounds(theta, theta.zhat, range, *reversed),
        Scheme::PointLate { epsilon } => {
            let late = point_late(theta, *epsilon)?;
            Ok((BoundsEntry { y: None, tau_low: late, tau_high: late }, vec![]))
        }
    }
}

/// Evaluates `scheme` at every unit's cross-fitted nuisances.
pub fn compute_bounds(
    table: &ObservationTable,
    nuisances: &CrossFitNuisances,
    scheme: &Scheme,
    range: &OutcomeRange,
) -> Result<BoundsEstimate> {
    range.validate()?;
    if nuisances.n() != table.n() {
        return Err(Error::Invalid(format!(
            "nuisances cover {} rows but the table has {}",
            nuisances.n(),
            table.n()
        )));
    }
    let mut entries = Vec::with_capacity(table.n());
    let mut selections = Vec::with_capacity(table.n());
    let mut thetas = Vec::with_capacity(table.n());
    let mut clip_count = 0;
    for (i, raw) in nuisances.rows().iter().enumerate() {
        let (theta, c) = clip_theta(raw, range, nuisances.eta());
        clip_count += c;
        let (entry, env) = unit_bounds(&theta, scheme, range).map_err(|e| match e {
            Error::Numerical(msg) => Error::Numerical(format!("unit {i}: {msg}")),
            Error::Invalid(msg) => Error::Invalid(format!("unit {i}: {msg}")),
            other => other,
        })?;
        entries.push(entry);
        selections.push(env);
        thetas.push(theta);
    }
    Ok(BoundsEstimate { scheme: *scheme, range: *range, entries, selections, thetas, clip_count, offset: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use rand::Rng;

    fn theta6(h1: f64, h0: f64, m10: f64, m01: f64, p1: f64, p0: f64, m00: f64, m11: f64) -> PointNuisance {
        PointNuisance { h: [h0, h1], m: [[m00, m01], [m10, m11]], p: [p0, p1], zhat: 0.5 }
    }

    fn unit() -> OutcomeRange {
        OutcomeRange::unit()
    }

    #[test]
    fn balke_pearl_worked_instance() {
        let t = theta6(0.6, 0.5, 0.5, 0.5, 0.8, 0.1, 0.5, 0.5);
        let b = balke_pearl_bounds(&t, &unit()).unwrap();
        assert!((b.tau_high - 0.25).abs() < 1e-15);
        assert!((b.tau_low + 0.05).abs() < 1e-15);
        assert!((b.tau_high - b.tau_low - 0.3).abs() < 1e-15);
    }

    #[test]
    fn balke_pearl_collapses_under_full_compliance() {
        let r = OutcomeRange::new(0.0, 3.0).unwrap();
        let t = theta6(2.0, 1.0, 1.5, 2.5, 1.0, 0.0, 1.0, 2.0);
        let b = balke_pearl_bounds(&t, &r).unwrap();
        assert_eq!((b.tau_low, b.tau_high), (1.0, 1.0));
        assert_eq!(point_late(&t, 0.05).unwrap(), 1.0);
    }

    #[test]
    fn manski_worked_instance() {
        let t = theta6(0.6, 0.5, 0.5, 0.5, 0.8, 0.1, 0.5, 0.5);
        let (b, env) = manski_bounds(&t, &unit()).unwrap();
        let y0_high = env.iter().find(|e| e.slot == Slot::Y0High).unwrap();
        // oracle: min{0.5*0.9 + 0.1, 0.5*0.2 + 0.8}
        let c0 = 0.5 * 0.9 + 1.0 * 0.1;
        let c1 = 0.5 * 0.2 + 1.0 * 0.8;
        assert_eq!(y0_high.candidates, [c0, c1]);
        assert_eq!(y0_high.selected, 0);
        assert_eq!(b.y.unwrap().y0_high, c0.min(c1));
        assert!((c0 - 0.55).abs() < 1e-15);
    }

    #[test]
    fn symmetric_instrument_ties_select_first() {
        let t = theta6(0.4, 0.4, 0.3, 0.3, 0.6, 0.6, 0.3, 0.5);
        let t = PointNuisance { m: [[0.3, 0.3], [0.5, 0.5]], ..t };
        let (_, env) = manski_bounds(&t, &unit()).unwrap();
        assert!(env.iter().all(|e| e.is_tie() && e.selected == 0));
        let (_, env) = manski_pepper_bounds(&t, 0.4, &unit(), false).unwrap();
        assert!(env.iter().all(|e| e.is_tie() && e.selected == 0));
    }

    #[test]
    fn psi_collapses_when_arm_fully_treated() {
        let t = theta6(0.0, 0.0, 0.2, 0.0, 1.0, 0.0, 0.0, 0.7);
        assert_eq!(psi(&t, 1, 1, 0.9), 0.7);
    }

    #[test]
    fn point_late_ratio_and_errors() {
        let t = theta6(0.6, 0.5, 0.5, 0.5, 0.7, 0.2, 0.5, 0.5);
        assert!((point_late(&t, 0.05).unwrap() - 0.2).abs() < 1e-15);
        let t0 = theta6(0.5, 0.5, 0.5, 0.5, 0.7, 0.2, 0.5, 0.5);
        assert_eq!(point_late(&t0, 0.05).unwrap(), 0.0);
        let weak = theta6(0.6, 0.5, 0.5, 0.5, 0.52, 0.5, 0.5, 0.5);
        assert_eq!(point_late(&weak, 0.05).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn out_of_range_inputs_rejected() {
        let t = theta6(1.2, 0.5, 0.5, 0.5, 0.7, 0.2, 0.5, 0.5);
        assert!(balke_pearl_bounds(&t, &unit()).is_err());
        let t = theta6(0.6, 0.5, 0.5, 0.5, 1.7, 0.2, 0.5, 0.5);
        assert!(manski_bounds(&t, &unit()).is_err());
        let t = theta6(0.6, 0.5, 0.5, 0.5, 0.7, 0.2, 0.5, 0.5);
        assert!(manski_pepper_bounds(&t, 1.0, &unit(), false).is_err());
    }

    fn random_theta(rng: &mut impl Rng) -> PointNuisance {
        let m = [[rng.gen(), rng.gen()], [rng.gen(), rng.gen()]];
        let p = [rng.gen(), rng.gen()];
        PointNuisance::from_cells(m, p, rng.gen_range(0.05..0.95))
    }

    #[test]
    fn fuzz_orderings_and_ranges() {
        let mut rng = seeding::rng(17, &[]);
        let r = OutcomeRange::new(-1.0, 2.0).unwrap();
        for _ in 0..10_000 {
            let mut t = random_theta(&mut rng);
            for v in t.m.iter_mut().flatten() {
                *v = -1.0 + 3.0 * *v;
            }
            t = PointNuisance::from_cells(t.m, t.p, t.zhat);
            let mut all = vec![balke_pearl_bounds(&t, &r).unwrap()];
            let (b, env) = manski_bounds(&t, &r).unwrap();
            assert!(env.iter().all(Envelope::is_consistent));
            all.push(b);
            for rev in [false, true] {
                let (b, env) = manski_pepper_bounds(&t, t.zhat, &r, rev).unwrap();
                assert!(env.iter().all(Envelope::is_consistent));
                all.push(b);
            }
            for b in all {
                assert!(b.tau_low <= b.tau_high + 1e-12);
                assert!(b.tau_low >= -3.0 - 1e-12 && b.tau_high <= 3.0 + 1e-12);
                let y = b.y.unwrap();
                for s in Slot::ALL {
                    assert!(y.get(s) >= -1.0 - 1e-12 && y.get(s) <= 2.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn reversed_flag_is_relabelling() {
        let mut rng = seeding::rng(5, &[]);
        for _ in 0..1000 {
            let t = random_theta(&mut rng);
            let (a, _) = manski_pepper_bounds(&t, t.zhat, &unit(), true).unwrap();
            let s = t.swap_instrument();
            let (b, _) = manski_pepper_bounds(&s, s.zhat, &unit(), false).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn outcome_forms_reproduce_bounds() {
        let mut rng = seeding::rng(6, &[]);
        let r = unit();
        for _ in 0..1000 {
            let t = random_theta(&mut rng);
            for scheme in [Scheme::BalkePearl, Scheme::Manski, Scheme::ManskiPepper { reversed: false }, Scheme::ManskiPepper { reversed: true }] {
                let (b, env) = unit_bounds(&t, &scheme, &r).unwrap();
                let forms = outcome_forms(&scheme, &r, &env).unwrap();
                for (slot, form) in Slot::ALL.iter().zip(&forms) {
                    let tt = if form.swapped { t.swap_instrument() } else { t };
                    let v: f64 = form
                        .terms
                        .iter()
                        .map(|k| {
                            let w = match k.weight {
                                Weight::One => 1.0,
                                Weight::Zhat => tt.zhat,
                                Weight::OneMinusZhat => 1.0 - tt.zhat,
                            };
                            w * psi(&tt, k.z, k.d, k.yb)
                        })
                        .sum();
                    assert!((v - b.y.unwrap().get(*slot)).abs() < 1e-14, "{scheme:?} {slot:?}");
                }
            }
        }
    }

    #[test]
    fn offset_shifts_treated_bounds() {
        let t = theta6(0.6, 0.5, 0.5, 0.5, 0.8, 0.1, 0.5, 0.5);
        let (b, env) = unit_bounds(&t, &Scheme::Manski, &unit()).unwrap();
        let est = BoundsEstimate {
            scheme: Scheme::Manski,
            range: unit(),
            entries: vec![b],
            selections: vec![env],
            thetas: vec![t],
            clip_count: 0,
            offset: 0.0,
        }
        .with_offset(0.1);
        let e = est.entries[0];
        assert_eq!(e.tau_high, b.tau_high - 0.1);
        assert_eq!(e.y.unwrap().y0_low, b.y.unwrap().y0_low);
        assert_eq!(e.y.unwrap().y1_low, b.y.unwrap().y1_low - 0.1);
    }
}
