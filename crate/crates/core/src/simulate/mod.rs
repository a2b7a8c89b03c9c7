//! Synthetic designs with closed-form truths and the Monte Carlo regret harness.

mod dgp;
mod margin;
mod study;
mod truth;

pub use dgp::{generate, Affine, ArmMeans, MarginProfile, Noise, Step, SyntheticDgp};
pub use margin::{margin_diagnostic, MarginComponent, MarginCurve};
pub use study::{
    best_in_class, run_study, Aggregate, DgpChoice, OracleInfo, PairedTest, RegretRecord, RegretReport, SlopeFit,
    StudyConfig,
};
pub use truth::{OracleSample, TrueUnit, TruthRecord};
