//! Ambiguity-robust policy learning with instrumental variables.
//!
//! When a binary instrument only partially identifies the conditional average
//! treatment effect, the effect at each covariate value is known to lie in an
//! interval `[tau_low(x), tau_high(x)]`. This crate turns such intervals into
//! individualized treatment rules under several decision criteria (maximin
//! welfare, maximin impact, minimax regret, Hurwicz) and estimates those rules
//! from data with cross-fitted, Neyman-orthogonal scores.
//!
//! The pipeline is
//!
//! 1. [`nuisance::crossfit`] fits the conditional means `h(z,x)`, `m(d,z,x)`,
//!    `p(z,x)` and the instrument propensity `z(x)` out of fold;
//! 2. [`bounds::compute_bounds`] evaluates per-unit identified sets under the
//!    Manski, Balke-Pearl or Manski-Pepper scheme (or the point-identified
//!    LATE comparator);
//! 3. [`scores::build_scores`] turns bounds into per-unit scores, optionally
//!    adding influence-function adjustments outside the sign indicators;
//! 4. [`optimize`] maximizes the empirical objective over quadrant or
//!    linear-index rules.
//!
//! [`simulate`] provides synthetic designs with closed-form truths and a Monte
//! Carlo regret harness; [`cli`] wires everything to CSV/JSON files.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod model;
pub mod numfmt;
pub mod nuisance;
pub mod optimize;
pub mod scores;
pub mod seeding;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    empirical_objective, evaluate_policy, population_objective, ObservationTable, OutcomeRange,
    Policy, PolicyClassSpec, PolicyKind, Side, Term,
};
