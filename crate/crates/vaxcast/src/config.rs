//! Pipeline configuration: one JSON file drives every subcommand.
//!
//! The file names the input exports, the population parameters for the
//! ratio transform, the split, the candidate grids, the learner and
//! stacker hyperparameters, and a mandatory master seed. Individual
//! values can be replaced from the command line with dotted-path
//! assignments (see [`apply_override`]) so that every run stays
//! reproducible from its config plus its flags.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::arima::{SelectionCriterion, DEFAULT_P_CANDIDATES, DEFAULT_Q_CANDIDATES};
use crate::error::Error;
use crate::eval::{BaseModel, CompareParams, SplitSpec};
use crate::learn::{BoostParams, FoldMode, ForestParams};
use crate::series::PopulationParams;
use crate::stack::SvrParams;
use crate::Result;

/// Input file locations, resolved relative to the config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    /// Clinical CSV (`date,first_doses`).
    pub clinical: PathBuf,
    /// One batched web-search export per file.
    pub trends: Vec<PathBuf>,
    /// Attitude-category word lists; the bundled map is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_map: Option<PathBuf>,
}

/// Candidate grids and the selection score for the autoregressive models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArimaGrids {
    pub p_candidates: Vec<usize>,
    pub q_candidates: Vec<usize>,
    pub criterion: SelectionCriterion,
}

impl Default for ArimaGrids {
    fn default() -> Self {
        ArimaGrids {
            p_candidates: DEFAULT_P_CANDIDATES.to_vec(),
            q_candidates: DEFAULT_Q_CANDIDATES.to_vec(),
            criterion: SelectionCriterion::default(),
        }
    }
}

/// Cross-validated search settings for the L1 penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoSearch {
    pub grid_points: usize,
    pub min_ratio: f64,
    pub cv_folds: usize,
    pub fold_mode: FoldMode,
}

impl Default for LassoSearch {
    fn default() -> Self {
        LassoSearch {
            grid_points: 50,
            min_ratio: 1e-4,
            cv_folds: 10,
            fold_mode: FoldMode::default(),
        }
    }
}

/// Learner hyperparameters. The per-learner `seed` fields are ignored:
/// the global config seed supersedes them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerParams {
    pub lasso: LassoSearch,
    pub boost: BoostParams,
    pub forest: ForestParams,
}

/// Trend-segmentation settings for the evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendParams {
    /// Each date starts a new segment; empty means one whole-series segment.
    pub breakpoints: Vec<NaiveDate>,
    /// |tau| at or below this is labeled steady.
    pub steady_threshold: f64,
}

impl Default for TrendParams {
    fn default() -> Self {
        TrendParams {
            breakpoints: Vec::new(),
            steady_threshold: 0.1,
        }
    }
}

fn default_feature_lag() -> usize {
    1
}

fn default_roster() -> Vec<BaseModel> {
    BaseModel::ALL.to_vec()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Everything a pipeline run needs. `paths`, `population`, and `seed` are
/// mandatory; all other fields default as documented on their types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: InputPaths,
    pub population: PopulationParams,
    #[serde(default)]
    pub split: SplitSpec,
    /// Days of lag appended to the feature matrix (one lost row per day).
    #[serde(default = "default_feature_lag")]
    pub feature_lag: usize,
    #[serde(default)]
    pub arima: ArimaGrids,
    #[serde(default)]
    pub learners: LearnerParams,
    #[serde(default)]
    pub svr: SvrParams,
    #[serde(default)]
    pub trend: TrendParams,
    /// Base models entering the comparison; defaults to all six.
    #[serde(default = "default_roster")]
    pub roster: Vec<BaseModel>,
    /// Master seed for every randomized step. Mandatory.
    pub seed: u64,
    /// Output directory for every written artifact.
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl PipelineConfig {
    /// Deserializes a config from a JSON value (used after overrides).
    pub fn from_value(value: Value) -> Result<PipelineConfig> {
        serde_json::from_value(value)
            .map_err(|e| Error::domain(format!("invalid config: {e}")))
    }

    /// Parses a config from JSON text.
    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::parse(e.line().max(1), e.to_string()))?;
        PipelineConfig::from_value(value)
    }

    /// Reads a config file, applies `key=value` overrides, and resolves
    /// relative input/output paths against the config file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::parse(e.line().max(1), e.to_string()))?;
        for assignment in overrides {
            apply_override(&mut value, assignment)?;
        }
        let mut config = PipelineConfig::from_value(value)?;
        if let Some(base) = path.parent() {
            config.resolve_against(base);
        }
        Ok(config)
    }

    /// Makes every relative path absolute with respect to `base`.
    pub fn resolve_against(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.paths.clinical);
        for trend in &mut self.paths.trends {
            resolve(trend);
        }
        if let Some(map) = &mut self.paths.category_map {
            resolve(map);
        }
        resolve(&mut self.out);
    }

    /// Checks that every referenced input file exists.
    pub fn validate_inputs(&self) -> Result<()> {
        if self.paths.trends.is_empty() {
            return Err(Error::domain(
                "config must list at least one trends export",
            ));
        }
        let mut required: Vec<&Path> = vec![&self.paths.clinical];
        required.extend(self.paths.trends.iter().map(PathBuf::as_path));
        if let Some(map) = &self.paths.category_map {
            required.push(map);
        }
        for path in required {
            if !path.is_file() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                ));
            }
        }
        Ok(())
    }

    /// Comparison parameters with the master seed propagated into every
    /// randomized component.
    pub fn compare_params(&self) -> CompareParams {
        CompareParams {
            split: self.split,
            p_candidates: self.arima.p_candidates.clone(),
            q_candidates: self.arima.q_candidates.clone(),
            criterion: self.arima.criterion,
            lasso_grid_points: self.learners.lasso.grid_points,
            lasso_min_ratio: self.learners.lasso.min_ratio,
            cv_folds: self.learners.lasso.cv_folds,
            fold_mode: self.learners.lasso.fold_mode,
            boost: BoostParams {
                seed: self.seed,
                ..self.learners.boost
            },
            forest: ForestParams {
                seed: self.seed,
                ..self.learners.forest
            },
            svr: self.svr,
            seed: self.seed,
        }
    }
}

/// Applies one `key=value` assignment to a JSON config value.
///
/// The key is a dotted path; object segments are created when missing,
/// numeric segments index into existing arrays. The value is parsed as
/// JSON when possible and falls back to a plain string, so
/// `seed=7`, `arima.p_candidates=[1,2]`, and `paths.clinical=other.csv`
/// all do what they look like.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        Error::domain(format!("override `{assignment}` must look like key=value"))
    })?;
    if path.is_empty() {
        return Err(Error::domain(format!(
            "override `{assignment}` has an empty key"
        )));
    }
    let parsed: Value = serde_json::from_str(raw.trim())
        .unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut replacement = Some(parsed);

    let segments: Vec<&str> = path.split('.').collect();
    let mut cursor = root;
    for (i, segment) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        if let Ok(index) = segment.parse::<usize>() {
            let array = cursor.as_array_mut().ok_or_else(|| {
                Error::domain(format!(
                    "override key `{path}`: segment `{segment}` indexes a non-array"
                ))
            })?;
            if index >= array.len() {
                return Err(Error::domain(format!(
                    "override key `{path}`: index {index} is out of bounds (array length {})",
                    array.len()
                )));
            }
            if last {
                array[index] = replacement.take().expect("set exactly once");
                return Ok(());
            }
            cursor = &mut array[index];
        } else {
            let object = cursor.as_object_mut().ok_or_else(|| {
                Error::domain(format!(
                    "override key `{path}`: segment `{segment}` descends into a non-object"
                ))
            })?;
            if last {
                object.insert(
                    segment.to_string(),
                    replacement.take().expect("set exactly once"),
                );
                return Ok(());
            }
            cursor = object
                .entry(segment.to_string())
                .or_insert_with(|| Value::Object(Default::default()));
        }
    }
    unreachable!("the last segment always returns");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "paths": {
                "clinical": "clinical.csv",
                "trends": ["batch1.csv", "batch2.csv"]
            },
            "population": { "base_population": 10000 },
            "seed": 42
        }"#
        .to_string()
    }

    #[test]
    fn minimal_config_parses_with_documented_defaults() {
        let config = PipelineConfig::from_json(&minimal_json()).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.split, SplitSpec::default());
        assert_eq!(config.split.train_len, 212);
        assert_eq!(config.feature_lag, 1);
        assert_eq!(config.arima.p_candidates, DEFAULT_P_CANDIDATES);
        assert_eq!(config.arima.q_candidates, DEFAULT_Q_CANDIDATES);
        assert_eq!(config.roster, BaseModel::ALL);
        assert_eq!(config.out, PathBuf::from("out"));
        assert_eq!(config.learners.lasso.grid_points, 50);
        assert_eq!(config.trend.steady_threshold, 0.1);
        assert!(config.paths.category_map.is_none());
        assert_eq!(config.population.temp_resident_share, 0.071);
    }

    #[test]
    fn the_seed_is_mandatory() {
        let text = r#"{
            "paths": { "clinical": "c.csv", "trends": ["t.csv"] },
            "population": { "base_population": 10000 }
        }"#;
        let err = PipelineConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = minimal_json().replace("\"seed\": 42", "\"seed\": 42, \"sede\": 1");
        let err = PipelineConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
    }

    #[test]
    fn overrides_replace_nested_values() {
        let mut value: Value = serde_json::from_str(&minimal_json()).unwrap();
        for assignment in [
            "seed=7",
            "arima.p_candidates=[1,2]",
            "learners.lasso.cv_folds=5",
            "paths.trends.1=replacement.csv",
            "population.temp_resident_share=0.05",
            "roster=[\"ar\",\"boost\"]",
            "split.test_len=3",
        ] {
            apply_override(&mut value, assignment).unwrap();
        }
        let config = PipelineConfig::from_value(value).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.arima.p_candidates, [1, 2]);
        assert_eq!(config.learners.lasso.cv_folds, 5);
        assert_eq!(config.paths.trends[1], PathBuf::from("replacement.csv"));
        assert_eq!(config.population.temp_resident_share, 0.05);
        assert_eq!(config.roster, [BaseModel::Ar, BaseModel::Boost]);
        assert_eq!(config.split.test_len, 3);
        // The q grid was left alone.
        assert_eq!(config.arima.q_candidates, DEFAULT_Q_CANDIDATES);
    }

    #[test]
    fn override_values_fall_back_to_plain_strings() {
        let mut value: Value = serde_json::from_str(&minimal_json()).unwrap();
        apply_override(&mut value, "paths.clinical=other.csv").unwrap();
        let config = PipelineConfig::from_value(value).unwrap();
        assert_eq!(config.paths.clinical, PathBuf::from("other.csv"));
    }

    #[test]
    fn malformed_overrides_are_rejected() {
        let mut value: Value = serde_json::from_str(&minimal_json()).unwrap();
        assert!(apply_override(&mut value, "no-equals-sign").is_err());
        assert!(apply_override(&mut value, "=5").is_err());
        let err = apply_override(&mut value, "paths.trends.9=x.csv").unwrap_err();
        assert!(err.to_string().contains("out of bounds"), "{err}");
        let err = apply_override(&mut value, "seed.nested=1").unwrap_err();
        assert!(err.to_string().contains("non-object"), "{err}");
        let err = apply_override(&mut value, "paths.0=x").unwrap_err();
        assert!(err.to_string().contains("non-array"), "{err}");
    }

    #[test]
    fn relative_paths_resolve_against_the_config_directory() {
        let mut config = PipelineConfig::from_json(&minimal_json()).unwrap();
        config.paths.category_map = Some(PathBuf::from("words.json"));
        config.resolve_against(Path::new("/configs/run1"));
        assert_eq!(config.paths.clinical, PathBuf::from("/configs/run1/clinical.csv"));
        assert_eq!(config.paths.trends[0], PathBuf::from("/configs/run1/batch1.csv"));
        assert_eq!(
            config.paths.category_map.as_deref(),
            Some(Path::new("/configs/run1/words.json"))
        );
        assert_eq!(config.out, PathBuf::from("/configs/run1/out"));
        // Absolute paths stay put.
        config.resolve_against(Path::new("/elsewhere"));
        assert_eq!(config.paths.clinical, PathBuf::from("/configs/run1/clinical.csv"));
    }

    #[test]
    fn missing_inputs_are_reported_by_path() {
        let mut config = PipelineConfig::from_json(&minimal_json()).unwrap();
        config.resolve_against(Path::new("/nonexistent-root"));
        let err = config.validate_inputs().unwrap_err();
        assert!(
            err.to_string().contains("/nonexistent-root/clinical.csv"),
            "{err}"
        );
        config.paths.trends.clear();
        let err = config.validate_inputs().unwrap_err();
        assert!(err.to_string().contains("at least one trends export"), "{err}");
    }

    #[test]
    fn the_master_seed_supersedes_learner_seeds() {
        let text = minimal_json().replace(
            "\"seed\": 42",
            "\"seed\": 42, \"learners\": {\"boost\": {\"seed\": 9}, \"forest\": {\"seed\": 11}}",
        );
        let config = PipelineConfig::from_json(&text).unwrap();
        let params = config.compare_params();
        assert_eq!(params.seed, 42);
        assert_eq!(params.boost.seed, 42);
        assert_eq!(params.forest.seed, 42);
        assert_eq!(params.split, config.split);
    }
}
