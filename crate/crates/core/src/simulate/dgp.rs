use rand::Rng;
use serde::{Deserialize, Serialize};

use super::truth::{TrueUnit, TruthRecord};
use crate::error::{Error, Result};
use crate::model::ObservationTable;
use crate::numfmt;
use crate::seeding::{self, stream};

/// Jump of `height` where covariate `feature` reaches `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub feature: usize,
    #[serde(with = "numfmt::float")]
    pub at: f64,
    #[serde(with = "numfmt::float")]
    pub height: f64,
}

/// `intercept + slopes . x + sum of steps` on the unit box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affine {
    #[serde(with = "numfmt::float")]
    pub intercept: f64,
    #[serde(default, with = "numfmt::float_seq")]
    pub slopes: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<Step>,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine { intercept: c, slopes: vec![], steps: vec![] }
    }

    pub fn new(intercept: f64, slopes: &[f64]) -> Self {
        Affine { intercept, slopes: slopes.to_vec(), steps: vec![] }
    }

    pub fn with_step(mut self, feature: usize, at: f64, height: f64) -> Self {
        self.steps.push(Step { feature, at, height });
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.intercept;
        for (b, xi) in self.slopes.iter().zip(x) {
            v += b * xi;
        }
        for s in &self.steps {
            if x[s.feature] >= s.at {
                v += s.height;
            }
        }
        v
    }

    /// Bounds on the value over the unit box `[0,1]^dim`; exact without
    /// steps, conservative with them.
    pub fn extremes(&self) -> (f64, f64) {
        let lo = self.intercept
            + self.slopes.iter().map(|b| b.min(0.0)).sum::<f64>()
            + self.steps.iter().map(|s| s.height.min(0.0)).sum::<f64>();
        let hi = self.intercept
            + self.slopes.iter().map(|b| b.max(0.0)).sum::<f64>()
            + self.steps.iter().map(|s| s.height.max(0.0)).sum::<f64>();
        (lo, hi)
    }
}

/// Mean outcome of one compliance type without and with treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmMeans {
    pub untreated: Affine,
    pub treated: Affine,
}

impl ArmMeans {
    pub fn constant(untreated: f64, treated: f64) -> Self {
        ArmMeans { untreated: Affine::constant(untreated), treated: Affine::constant(treated) }
    }
}

/// Outcome noise around the conditional mean; outcomes stay in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", from = "NoiseRepr")]
pub enum Noise {
    /// `Y ~ Bernoulli(mu)`.
    Bernoulli,
    /// `Y = mu + spread * min(mu, 1 - mu) * U` with `U ~ Uniform[-1, 1]`.
    Uniform {
        #[serde(with = "numfmt::float")]
        spread: f64,
    },
}

/// How the Balke-Pearl bounds behave near zero, which governs the margin
/// condition of the minimax-regret score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", from = "MarginProfileRepr")]
pub enum MarginProfile {
    /// A bound crosses zero with bounded density.
    SmoothCrossing,
    /// Both bounds stay at least `t0` away from zero.
    Separated {
        #[serde(with = "numfmt::float")]
        t0: f64,
    },
    /// A bound equals zero on a set of positive probability.
    PointMass,
}

// Unit variants spelled as empty structs so stray keys are rejected.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum NoiseRepr {
    Bernoulli {},
    Uniform {
        #[serde(with = "numfmt::float")]
        spread: f64,
    },
}

impl From<NoiseRepr> for Noise {
    fn from(r: NoiseRepr) -> Self {
        match r {
            NoiseRepr::Bernoulli {} => Noise::Bernoulli,
            NoiseRepr::Uniform { spread } => Noise::Uniform { spread },
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum MarginProfileRepr {
    SmoothCrossing {},
    Separated {
        #[serde(with = "numfmt::float")]
        t0: f64,
    },
    PointMass {},
}

impl From<MarginProfileRepr> for MarginProfile {
    fn from(r: MarginProfileRepr) -> Self {
        match r {
            MarginProfileRepr::SmoothCrossing {} => MarginProfile::SmoothCrossing,
            MarginProfileRepr::Separated { t0 } => MarginProfile::Separated { t0 },
            MarginProfileRepr::PointMass {} => MarginProfile::PointMass,
        }
    }
}

/// Binary-instrument design with monotone compliance.
///
/// Covariates are uniform on `[0,1]^dim`. Each unit is a complier with
/// probability `complier(x)`, an always-taker with `always_taker(x)` and a
/// never-taker otherwise; `D = D(Z)` and `Y` is drawn around the mean of its
/// type and realized treatment. Outcomes live in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDgp {
    pub dim: usize,
    pub instrument: Affine,
    pub complier: Affine,
    pub always_taker: Affine,
    pub complier_outcome: ArmMeans,
    pub always_outcome: ArmMeans,
    pub never_outcome: ArmMeans,
    pub noise: Noise,
    pub profile: MarginProfile,
}

/// Smallest instrument propensity allowed anywhere in the box.
const MIN_INSTRUMENT: f64 = 0.01;

impl SyntheticDgp {
    fn affines(&self) -> Vec<(&'static str, &Affine)> {
        vec![
            ("instrument", &self.instrument),
            ("complier", &self.complier),
            ("always_taker", &self.always_taker),
            ("complier_outcome.untreated", &self.complier_outcome.untreated),
            ("complier_outcome.treated", &self.complier_outcome.treated),
            ("always_outcome.untreated", &self.always_outcome.untreated),
            ("always_outcome.treated", &self.always_outcome.treated),
            ("never_outcome.untreated", &self.never_outcome.untreated),
            ("never_outcome.treated", &self.never_outcome.treated),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("invalid design: {msg}")));
        if self.dim == 0 || self.dim > 16 {
            return bad(format!("dimension {} not in [1, 16]", self.dim));
        }
        for (name, f) in self.affines() {
            if f.slopes.len() > self.dim {
                return bad(format!("{name} has {} slopes for dimension {}", f.slopes.len(), self.dim));
            }
            if !f.intercept.is_finite() || f.slopes.iter().any(|b| !b.is_finite()) {
                return bad(format!("{name} has a non-finite coefficient"));
            }
            if let Some(st) = f.steps.iter().find(|st| st.feature >= self.dim || !(st.at.is_finite() && st.height.is_finite())) {
                return bad(format!("{name} has an invalid step on covariate {}", st.feature));
            }
        }
        let (zl, zh) = self.instrument.extremes();
        if zl < MIN_INSTRUMENT || zh > 1.0 - MIN_INSTRUMENT {
            return bad(format!("instrument probability range [{zl}, {zh}] leaves [0.01, 0.99]"));
        }
        let (cl, _) = self.complier.extremes();
        let (al, _) = self.always_taker.extremes();
        let sum = Affine {
            intercept: self.complier.intercept + self.always_taker.intercept,
            slopes: (0..self.dim)
                .map(|j| self.complier.slopes.get(j).unwrap_or(&0.0) + self.always_taker.slopes.get(j).unwrap_or(&0.0))
                .collect(),
            steps: self.complier.steps.iter().chain(&self.always_taker.steps).copied().collect(),
        };
        if cl < 0.0 || al < 0.0 || sum.extremes().1 > 1.0 {
            return bad("compliance-type probabilities leave the simplex".into());
        }
        for (name, f) in self.affines().into_iter().skip(3) {
            let (lo, hi) = f.extremes();
            if lo < 0.0 || hi > 1.0 {
                return bad(format!("{name} ranges over [{lo}, {hi}], outside [0, 1]"));
            }
        }
        if let Noise::Uniform { spread } = self.noise {
            if !(spread > 0.0 && spread <= 1.0) {
                return bad(format!("uniform noise spread {spread} not in (0, 1]"));
            }
        }
        if let MarginProfile::Separated { t0 } = self.profile {
            let worst = self.min_abs_bound();
            if worst < t0 {
                return bad(format!("separated profile needs |bounds| >= {t0}, found {worst}"));
            }
        }
        Ok(())
    }

    /// Smallest `|tau_low|` or `|tau_high|` over a covariate grid.
    fn min_abs_bound(&self) -> f64 {
        let per = if self.dim <= 3 { 21 } else { 3 };
        let total = (per as usize).pow(self.dim as u32);
        let mut worst = f64::INFINITY;
        let mut x = vec![0.0; self.dim];
        for mut code in 0..total {
            for v in x.iter_mut() {
                *v = (code % per) as f64 / (per - 1) as f64;
                code /= per;
            }
            let u = TrueUnit::at(self, &x);
            let (lo, hi) = u.balke_pearl();
            worst = worst.min(lo.abs()).min(hi.abs());
        }
        worst
    }

    /// Design with both minimax-regret components bounded away from zero
    /// (gap 0.13) and a smooth score `tau_low + tau_high` crossing zero
    /// along `x1 + x2 = 1`.
    pub fn separated() -> Self {
        SyntheticDgp {
            dim: 2,
            instrument: Affine::new(0.4, &[0.0, 0.2]),
            complier: Affine::constant(0.5),
            always_taker: Affine::constant(0.2),
            complier_outcome: ArmMeans {
                untreated: Affine::new(0.62, &[-0.12, -0.12]),
                treated: Affine::new(0.38, &[0.12, 0.12]),
            },
            always_outcome: ArmMeans::constant(0.45, 0.5),
            never_outcome: ArmMeans::constant(0.5, 0.55),
            noise: Noise::Bernoulli,
            profile: MarginProfile::Separated { t0: 0.1 },
        }
    }

    /// Like [`SyntheticDgp::separated`] but with a steeper complier effect so
    /// that both effect bounds cross zero inside the box.
    pub fn smooth_crossing() -> Self {
        SyntheticDgp {
            complier_outcome: ArmMeans {
                untreated: Affine::new(0.95, &[-0.45, -0.45]),
                treated: Affine::new(0.05, &[0.45, 0.45]),
            },
            profile: MarginProfile::SmoothCrossing,
            ..Self::separated()
        }
    }

    /// Lower effect bound identically zero: always-takers always succeed
    /// when treated, never-takers always fail untreated, and compliers have
    /// no effect.
    pub fn point_mass() -> Self {
        SyntheticDgp {
            complier_outcome: ArmMeans {
                untreated: Affine::new(0.3, &[0.4, 0.0]),
                treated: Affine::new(0.3, &[0.4, 0.0]),
            },
            always_outcome: ArmMeans::constant(0.5, 1.0),
            never_outcome: ArmMeans::constant(0.0, 0.5),
            profile: MarginProfile::PointMass,
            ..Self::separated()
        }
    }

    /// Everyone complies, so `D = Z` and the effect is point identified.
    pub fn full_compliance() -> Self {
        SyntheticDgp {
            dim: 2,
            instrument: Affine::constant(0.5),
            complier: Affine::constant(1.0),
            always_taker: Affine::constant(0.0),
            complier_outcome: ArmMeans {
                untreated: Affine::new(0.6, &[-0.2, 0.1]),
                treated: Affine::new(0.3, &[0.3, 0.2]),
            },
            always_outcome: ArmMeans::constant(0.5, 0.5),
            never_outcome: ArmMeans::constant(0.5, 0.5),
            noise: Noise::Bernoulli,
            profile: MarginProfile::SmoothCrossing,
        }
    }

    /// Separated design whose effect bounds are positive everywhere.
    pub fn all_positive() -> Self {
        SyntheticDgp {
            complier: Affine::constant(0.8),
            always_taker: Affine::constant(0.1),
            complier_outcome: ArmMeans {
                untreated: Affine::new(0.2, &[0.1, 0.0]),
                treated: Affine::new(0.7, &[0.2, 0.0]),
            },
            always_outcome: ArmMeans::constant(0.5, 0.95),
            never_outcome: ArmMeans::constant(0.05, 0.5),
            profile: MarginProfile::Separated { t0: 0.1 },
            ..Self::separated()
        }
    }

    /// Six covariates, a randomized instrument, and a complier effect that
    /// jumps from -0.25 to 0.75 where `x1` crosses 0.5. Local averages with
    /// few neighbours smear the jump and shift the plug-in decision boundary.
    pub fn slow_learner_stress() -> Self {
        SyntheticDgp {
            dim: 6,
            instrument: Affine::constant(0.5),
            complier: Affine::constant(0.8),
            always_taker: Affine::constant(0.1),
            complier_outcome: ArmMeans {
                untreated: Affine::constant(0.25),
                treated: Affine::constant(0.0).with_step(0, 0.5, 1.0),
            },
            always_outcome: ArmMeans::constant(0.45, 0.5),
            never_outcome: ArmMeans::constant(0.5, 0.55),
            noise: Noise::Bernoulli,
            profile: MarginProfile::Separated { t0: 0.05 },
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "separated" => Ok(Self::separated()),
            "smooth_crossing" => Ok(Self::smooth_crossing()),
            "point_mass" => Ok(Self::point_mass()),
            "full_compliance" => Ok(Self::full_compliance()),
            "all_positive" => Ok(Self::all_positive()),
            "slow_learner_stress" => Ok(Self::slow_learner_stress()),
            other => Err(Error::Config(format!(
                "unknown design preset `{other}` (expected separated, smooth_crossing, point_mass, full_compliance, all_positive, slow_learner_stress)"
            ))),
        }
    }
}

fn draw_outcome(noise: &Noise, mu: f64, rng: &mut impl Rng) -> f64 {
    match noise {
        Noise::Bernoulli => (rng.gen::<f64>() < mu) as u8 as f64,
        Noise::Uniform { spread } => {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            (mu + spread * mu.min(1.0 - mu) * u).clamp(0.0, 1.0)
        }
    }
}

/// Draws `n` units and their exact conditional truths.
pub fn generate(dgp: &SyntheticDgp, n: usize, seed: u64) -> Result<(ObservationTable, TruthRecord)> {
    dgp.validate()?;
    if n == 0 {
        return Err(Error::Invalid("cannot generate an empty sample".into()));
    }
    let mut rng = seeding::rng(seed, &[stream::DATA]);
    let mut x = Vec::with_capacity(n * dgp.dim);
    let (mut y, mut d, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut units = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: Vec<f64> = (0..dgp.dim).map(|_| rng.gen::<f64>()).collect();
        let u = TrueUnit::at(dgp, &xi);
        let zi = (rng.gen::<f64>() < u.zprob) as u8;
        let t: f64 = rng.gen();
        // type: complier, always-taker, never-taker
        let (di, means) = if t < u.complier {
            (zi, &dgp.complier_outcome)
        } else if t < u.complier + u.always {
            (1, &dgp.always_outcome)
        } else {
            (0, &dgp.never_outcome)
        };
        let mu = if di == 1 { means.treated.eval(&xi) } else { means.untreated.eval(&xi) };
        y.push(draw_outcome(&dgp.noise, mu, &mut rng));
        d.push(di);
        z.push(zi);
        x.extend_from_slice(&xi);
        units.push(u);
    }
    let table = ObservationTable::from_flat(y, d, z, x, dgp.dim, Some(crate::model::OutcomeRange::unit()))?;
    Ok((table, TruthRecord { units }))
}
