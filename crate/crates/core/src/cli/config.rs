use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::Scheme;
use crate::error::{Error, Result};
use crate::model::{OutcomeRange, Policy, PolicyClassSpec};
use crate::nuisance::{LearnerSpec, DEFAULT_ETA};
use crate::numfmt;
use crate::optimize::LinearOptions;
use crate::scores::{Criterion, ScoreMode};
use crate::simulate::StudyConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Which CSV columns hold `Y`, `D`, `Z` and the covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    pub y: String,
    pub d: String,
    pub z: String,
    pub covariates: Vec<String>,
}

/// Criterion as written in a config file. The baseline policy of the
/// baseline-regret criterion may be inline or in its own JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CriterionSpec {
    MaximinWelfare {},
    MaximinImpact {},
    MinimaxRegret {},
    MinimaxRegretBaseline {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        baseline: Option<Policy>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        baseline_file: Option<PathBuf>,
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

impl CriterionSpec {
    pub fn resolve(&self, base: &Path) -> Result<Criterion> {
        let c = match self {
            CriterionSpec::MaximinWelfare {} => Criterion::MaximinWelfare,
            CriterionSpec::MaximinImpact {} => Criterion::MaximinImpact,
            CriterionSpec::MinimaxRegret {} => Criterion::MinimaxRegret,
            CriterionSpec::MinimaxRegretBaseline { baseline, baseline_file } => {
                let baseline = match (baseline, baseline_file) {
                    (Some(p), None) => p.clone(),
                    (None, Some(f)) => read_json(&base.join(f))?,
                    _ => {
                        return Err(Error::Config(
                            "minimax_regret_baseline needs exactly one of `baseline` or `baseline_file`".into(),
                        ))
                    }
                };
                Criterion::MinimaxRegretBaseline { baseline }
            }
            CriterionSpec::HurwiczWelfare { delta0, delta1 } => {
                Criterion::HurwiczWelfare { delta0: *delta0, delta1: *delta1 }
            }
            CriterionSpec::HurwiczImpact { delta } => Criterion::HurwiczImpact { delta: *delta },
        };
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }
}

fn default_mode() -> ScoreMode {
    ScoreMode::Orthogonal
}

fn default_folds() -> usize {
    5
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

/// Configuration shared by `fit`, `bounds` and `scores`.
///
/// Relative paths are resolved against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub input: PathBuf,
    pub columns: ColumnMap,
    pub scheme: Scheme,
    pub criterion: CriterionSpec,
    #[serde(default = "default_mode")]
    pub mode: ScoreMode,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_eta", with = "numfmt::float")]
    pub eta: f64,
    #[serde(default)]
    pub learner: LearnerSpec,
    pub policy_class: PolicyClassSpec,
    pub outcome_range: OutcomeRange,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Per-unit cost subtracted from the effect and treated-outcome bounds.
    #[serde(default, with = "numfmt::float")]
    pub score_offset: f64,
    #[serde(default)]
    pub linear: LinearOptions,
}

impl RunConfig {
    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.columns.covariates.is_empty() {
            return bad("at least one covariate column is required".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(self.eta > 0.0 && self.eta < 0.5) {
            return bad(format!("eta must lie in (0, 0.5), got {}", self.eta));
        }
        if !self.score_offset.is_finite() {
            return bad("score_offset must be finite".into());
        }
        if let Scheme::PointLate { epsilon } = self.scheme {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return bad(format!("point LATE epsilon must be positive, got {epsilon}"));
            }
        }
        let as_config = |e: Error| match e {
            Error::Invalid(m) => Error::Config(m),
            other => other,
        };
        self.outcome_range.validate().map_err(as_config)?;
        self.learner.validate().map_err(as_config)?;
        self.policy_class.validate(self.columns.covariates.len()).map_err(as_config)?;
        Ok(())
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub(crate) fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Reads and validates a run config.
pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let cfg: RunConfig = read_json(path)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and validates a study config.
pub fn load_study_config(path: &Path) -> Result<StudyConfig> {
    let cfg: StudyConfig = read_json(path)?;
    cfg.validate().map_err(|e| match e {
        Error::Invalid(m) => Error::Config(m),
        other => other,
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "input": "data.csv",
        "columns": {"y": "y", "d": "d", "z": "z", "covariates": ["x1", "x2"]},
        "scheme": {"kind": "balke_pearl"},
        "criterion": {"kind": "minimax_regret"},
        "policy_class": {"kind": "quadrant", "features": [0, 1]},
        "outcome_range": {"y_low": 0.0, "y_high": 1.0}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c: RunConfig = serde_json::from_str(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.folds, 5);
        assert_eq!(c.mode, ScoreMode::Orthogonal);
        assert_eq!(c.eta, DEFAULT_ETA);
        assert_eq!(c.score_offset, 0.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"input\"", "\"typo\": 1, \"input\"");
        assert!(serde_json::from_str::<RunConfig>(&text).is_err());
        let text = MINIMAL.replace("{\"kind\": \"minimax_regret\"}", "{\"kind\": \"minimax_regret\", \"delta\": 1}");
        assert!(serde_json::from_str::<RunConfig>(&text).is_err());
        let text = MINIMAL.replace("{\"kind\": \"balke_pearl\"}", "{\"kind\": \"balke_pearl\", \"reversed\": true}");
        assert!(serde_json::from_str::<RunConfig>(&text).is_err());
        assert!(serde_json::from_str::<Criterion>(r#"{"kind": "maximin_impact", "x": 1}"#).is_err());
        assert!(serde_json::from_str::<Criterion>(r#"{"kind": "maximin_impact"}"#).is_ok());
    }

    #[test]
    fn semantic_checks() {
        let mut c: RunConfig = serde_json::from_str(MINIMAL).unwrap();
        c.schema_version = 2;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c: RunConfig = serde_json::from_str(MINIMAL).unwrap();
        c.policy_class = PolicyClassSpec::quadrant(0, 5);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c: RunConfig = serde_json::from_str(MINIMAL).unwrap();
        c.outcome_range = OutcomeRange { y_low: 1.0, y_high: 0.0 };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn baseline_needs_exactly_one_source() {
        let spec = CriterionSpec::MinimaxRegretBaseline { baseline: None, baseline_file: None };
        assert!(spec.resolve(Path::new(".")).is_err());
        let spec = CriterionSpec::MinimaxRegretBaseline { baseline: Some(Policy::treat_none(2)), baseline_file: None };
        assert!(matches!(spec.resolve(Path::new(".")).unwrap(), Criterion::MinimaxRegretBaseline { .. }));
        let spec = CriterionSpec::HurwiczImpact { delta: 1.5 };
        assert!(spec.resolve(Path::new(".")).is_err());
    }
}
