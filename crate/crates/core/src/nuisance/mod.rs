//! Conditional-mean learners and K-fold cross-fitting of the nuisance vector.

mod crossfit;
mod folds;
mod learners;

pub use crossfit::{crossfit, ClipCounts, CrossFitNuisances, PointNuisance, RowNuisance};
pub use folds::{make_folds, FoldAssignment};
pub use learners::{fit_learner, FittedModel, LearnerKind, LearnerSpec};

/// Default trimming constant for estimated probabilities.
pub const DEFAULT_ETA: f64 = 0.01;
