//! Data, policy and policy-class types, plus objective evaluation.

use serde::{Deserialize, Serialize};

use crate::bounds::Scheme;
use crate::error::{Error, Result};
use crate::numfmt;
use crate::scores::Criterion;
use crate::simulate::SyntheticDgp;

/// Known support `[y_low, y_high]` of the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeRange {
    #[serde(with = "numfmt::float")]
    pub y_low: f64,
    #[serde(with = "numfmt::float")]
    pub y_high: f64,
}

impl OutcomeRange {
    pub fn new(y_low: f64, y_high: f64) -> Result<Self> {
        let r = OutcomeRange { y_low, y_high };
        r.validate()?;
        Ok(r)
    }

    pub fn unit() -> Self {
        OutcomeRange { y_low: 0.0, y_high: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y_low.is_finite() && self.y_high.is_finite()) {
            return Err(Error::Invalid(format!(
                "outcome range must be finite, got [{}, {}]",
                self.y_low, self.y_high
            )));
        }
        if self.y_low >= self.y_high {
            return Err(Error::Invalid(format!(
                "outcome range needs y_low < y_high, got [{}, {}]",
                self.y_low, self.y_high
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.y_high - self.y_low
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.y_low && y <= self.y_high
    }

    pub fn clamp(&self, y: f64) -> f64 {
        y.clamp(self.y_low, self.y_high)
    }
}

/// Rows `(y_i, d_i, z_i, x_i)` with binary treatment and instrument.
///
/// Covariates are stored row-major. The table is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    y: Vec<f64>,
    d: Vec<u8>,
    z: Vec<u8>,
    x: Vec<f64>,
    k_x: usize,
    range: Option<OutcomeRange>,
}

impl ObservationTable {
    /// Builds a table from per-row covariate vectors.
    pub fn new(
        y: Vec<f64>,
        d: Vec<u8>,
        z: Vec<u8>,
        x: Vec<Vec<f64>>,
        range: Option<OutcomeRange>,
    ) -> Result<Self> {
        let k_x = x.first().map_or(0, |r| r.len());
        if let Some((i, r)) = x.iter().enumerate().find(|(_, r)| r.len() != k_x) {
            return Err(Error::Data(format!(
                "row {i} has {} covariates, expected {k_x}",
                r.len()
            )));
        }
        let flat = x.into_iter().flatten().collect();
        Self::from_flat(y, d, z, flat, k_x, range)
    }

    /// Builds a table from a row-major covariate buffer with `k_x` columns.
    pub fn from_flat(
        y: Vec<f64>,
        d: Vec<u8>,
        z: Vec<u8>,
        x: Vec<f64>,
        k_x: usize,
        range: Option<OutcomeRange>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::Data("observation table is empty".into()));
        }
        if k_x == 0 {
            return Err(Error::Data("at least one covariate column is required".into()));
        }
        if d.len() != n || z.len() != n || x.len() != n * k_x {
            return Err(Error::Data(format!(
                "column lengths disagree: y={n}, d={}, z={}, x={} (k_x={k_x})",
                d.len(),
                z.len(),
                x.len()
            )));
        }
        if let Some(i) = d.iter().position(|&v| v > 1) {
            return Err(Error::Data(format!("row {i}: treatment must be 0 or 1, got {}", d[i])));
        }
        if let Some(i) = z.iter().position(|&v| v > 1) {
            return Err(Error::Data(format!("row {i}: instrument must be 0 or 1, got {}", z[i])));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("row {i}: outcome is not finite")));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("row {}: covariate {} is not finite", i / k_x, i % k_x)));
        }
        if let Some(r) = &range {
            r.validate()?;
            if let Some(i) = y.iter().position(|&v| !r.contains(v)) {
                return Err(Error::Data(format!(
                    "row {i}: outcome {} outside range [{}, {}]",
                    y[i], r.y_low, r.y_high
                )));
            }
        }
        Ok(ObservationTable { y, d, z, x, k_x, range })
    }

    /// A table carrying only covariates, for evaluating policies on oracle samples.
    pub fn covariates_only(x: Vec<f64>, k_x: usize) -> Result<Self> {
        let n = if k_x == 0 { 0 } else { x.len() / k_x };
        Self::from_flat(vec![0.0; n], vec![0; n], vec![0; n], x, k_x, None)
    }

    /// Same rows with a different outcome column.
    pub fn with_outcomes(&self, y: Vec<f64>) -> Result<Self> {
        Self::from_flat(y, self.d.clone(), self.z.clone(), self.x.clone(), self.k_x, self.range)
    }

    pub fn with_range(&self, range: Option<OutcomeRange>) -> Result<Self> {
        Self::from_flat(self.y.clone(), self.d.clone(), self.z.clone(), self.x.clone(), self.k_x, range)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k_x(&self) -> usize {
        self.k_x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn d(&self) -> &[u8] {
        &self.d
    }

    pub fn z(&self) -> &[u8] {
        &self.z
    }

    /// Row-major covariate buffer.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.k_x..(i + 1) * self.k_x]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.x[i * self.k_x + j]).collect()
    }

    pub fn range(&self) -> Option<OutcomeRange> {
        self.range
    }
}

/// Comparison used by one quadrant coordinate: `x <= t` or `x > t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "le")]
    AtMost,
    #[serde(rename = "gt")]
    Above,
}

impl Side {
    pub fn holds(self, x: f64, t: f64) -> bool {
        match self {
            Side::AtMost => x <= t,
            Side::Above => x > t,
        }
    }
}

/// A monomial `x[feature]^power`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub feature: usize,
    #[serde(default = "one")]
    pub power: u32,
}

fn one() -> u32 {
    1
}

impl Term {
    pub fn linear(feature: usize) -> Self {
        Term { feature, power: 1 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let v = x[self.feature];
        if self.power == 1 {
            v
        } else {
            v.powi(self.power as i32)
        }
    }
}

/// A deterministic treatment rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Policy {
    /// Treat iff `x[f1] s1 t1` and `x[f2] s2 t2`.
    Quadrant {
        features: [usize; 2],
        #[serde(with = "numfmt::float_pair")]
        thresholds: [f64; 2],
        orientation: [Side; 2],
    },
    /// Treat iff `beta[0] + sum_j beta[j+1] * term_j(x) >= 0`.
    Linear {
        terms: Vec<Term>,
        #[serde(with = "numfmt::float_seq")]
        beta: Vec<f64>,
    },
}

impl Policy {
    pub fn quadrant(features: [usize; 2], thresholds: [f64; 2], orientation: [Side; 2]) -> Self {
        Policy::Quadrant { features, thresholds, orientation }
    }

    pub fn linear(terms: Vec<Term>, beta: Vec<f64>) -> Result<Self> {
        let p = Policy::Linear { terms, beta };
        p.check_shape()?;
        Ok(p)
    }

    /// Linear rule over the raw features `0..k_x`.
    pub fn linear_in(k_x: usize, beta: Vec<f64>) -> Result<Self> {
        Self::linear((0..k_x).map(Term::linear).collect(), beta)
    }

    pub fn treat_none(k_x: usize) -> Self {
        let mut beta = vec![0.0; k_x + 1];
        beta[0] = -1.0;
        Policy::Linear { terms: (0..k_x).map(Term::linear).collect(), beta }
    }

    pub fn treat_all(k_x: usize) -> Self {
        let mut beta = vec![0.0; k_x + 1];
        beta[0] = 1.0;
        Policy::Linear { terms: (0..k_x).map(Term::linear).collect(), beta }
    }

    fn check_shape(&self) -> Result<()> {
        match self {
            Policy::Quadrant { thresholds, .. } => {
                if thresholds.iter().any(|t| t.is_nan()) {
                    return Err(Error::Invalid("quadrant threshold is NaN".into()));
                }
            }
            Policy::Linear { terms, beta } => {
                if beta.len() != terms.len() + 1 {
                    return Err(Error::Invalid(format!(
                        "linear rule has {} terms but {} coefficients (expected {})",
                        terms.len(),
                        beta.len(),
                        terms.len() + 1
                    )));
                }
                if beta.iter().all(|&b| b == 0.0) {
                    return Err(Error::Invalid("linear rule coefficients are all zero".into()));
                }
                if beta.iter().any(|b| !b.is_finite()) {
                    return Err(Error::Invalid("linear rule coefficient is not finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Checks that the rule can be evaluated on rows with `k_x` covariates.
    pub fn validate_for(&self, k_x: usize) -> Result<()> {
        self.check_shape()?;
        let max_feature = match self {
            Policy::Quadrant { features, .. } => features.iter().copied().max(),
            Policy::Linear { terms, .. } => terms.iter().map(|t| t.feature).max(),
        };
        if let Some(f) = max_feature {
            if f >= k_x {
                return Err(Error::Invalid(format!(
                    "policy uses covariate {f} but rows have only {k_x}"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates the rule on one covariate row. Feature indices are not checked.
    pub fn treats(&self, x: &[f64]) -> bool {
        match self {
            Policy::Quadrant { features, thresholds, orientation } => {
                orientation[0].holds(x[features[0]], thresholds[0])
                    && orientation[1].holds(x[features[1]], thresholds[1])
            }
            Policy::Linear { terms, beta } => {
                let mut s = beta[0];
                for (t, b) in terms.iter().zip(&beta[1..]) {
                    s += b * t.eval(x);
                }
                s >= 0.0
            }
        }
    }
}

pub fn evaluate_policy(policy: &Policy, table: &ObservationTable) -> Result<Vec<u8>> {
    policy.validate_for(table.k_x())?;
    Ok((0..table.n()).map(|i| policy.treats(table.row(i)) as u8).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Quadrant,
    Linear,
}

/// Which covariates (and monomials of them) a policy class may use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyClassSpec {
    pub kind: PolicyKind,
    pub features: Vec<usize>,
    /// Extra monomials appended after the linear terms of `features`.
    #[serde(default)]
    pub expansion: Vec<Term>,
}

impl PolicyClassSpec {
    pub fn quadrant(f1: usize, f2: usize) -> Self {
        PolicyClassSpec { kind: PolicyKind::Quadrant, features: vec![f1, f2], expansion: vec![] }
    }

    pub fn linear(features: Vec<usize>) -> Self {
        PolicyClassSpec { kind: PolicyKind::Linear, features, expansion: vec![] }
    }

    pub fn with_expansion(mut self, expansion: Vec<Term>) -> Self {
        self.expansion = expansion;
        self
    }

    /// Effective features in order: linear terms first, then the expansion.
    pub fn terms(&self) -> Vec<Term> {
        self.features
            .iter()
            .map(|&f| Term::linear(f))
            .chain(self.expansion.iter().copied())
            .collect()
    }

    pub fn validate(&self, k_x: usize) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Invalid("policy class needs at least one feature".into()));
        }
        let terms = self.terms();
        if let Some(t) = terms.iter().find(|t| t.feature >= k_x) {
            return Err(Error::Invalid(format!(
                "policy class uses covariate {} but rows have only {k_x}",
                t.feature
            )));
        }
        if let Some(t) = terms.iter().find(|t| t.power == 0) {
            return Err(Error::Invalid(format!(
                "monomial power 0 on covariate {} is a constant; use the intercept",
                t.feature
            )));
        }
        if self.kind == PolicyKind::Quadrant && (terms.len() != 2 || !self.expansion.is_empty()) {
            return Err(Error::Invalid(format!(
                "quadrant class needs exactly 2 plain features, got {} effective terms",
                terms.len()
            )));
        }
        Ok(())
    }
}

/// `(1/n) * sum_i (2 a_i - 1) * gamma_i`, summed in row order.
pub fn empirical_objective(gamma: &[f64], assignment: &[u8]) -> Result<f64> {
    if gamma.is_empty() {
        return Err(Error::Invalid("empirical objective of an empty sample".into()));
    }
    if gamma.len() != assignment.len() {
        return Err(Error::Invalid(format!(
            "{} scores but {} assignments",
            gamma.len(),
            assignment.len()
        )));
    }
    let mut s = 0.0;
    for (&g, &a) in gamma.iter().zip(assignment) {
        if a == 1 {
            s += g;
        } else {
            s -= g;
        }
    }
    Ok(s / gamma.len() as f64)
}

/// Monte Carlo value `E[(2 pi(X) - 1) Gamma(X)]` under a synthetic design,
/// using the design's true bounds for `scheme`.
pub fn population_objective(
    dgp: &SyntheticDgp,
    policy: &Policy,
    scheme: &Scheme,
    criterion: &Criterion,
    n_oracle: usize,
    seed: u64,
) -> Result<f64> {
    if n_oracle < 1 {
        return Err(Error::Invalid("n_oracle must be at least 1".into()));
    }
    let oracle = crate::simulate::OracleSample::draw(dgp, n_oracle, seed)?;
    let gamma = oracle.true_scores(scheme, criterion)?;
    let assignment = evaluate_policy(policy, oracle.table())?;
    empirical_objective(&gamma, &assignment)
}
