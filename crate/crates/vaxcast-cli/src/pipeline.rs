//! The shared data-preparation stage and the artifact layout.
//!
//! Every subcommand that touches model inputs re-runs ingestion from the
//! raw exports instead of reading back the prep CSVs: the pipeline is
//! deterministic and cheap, while the written CSVs round values to six
//! decimals and would silently degrade downstream fits.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use vaxcast::config::PipelineConfig;
use vaxcast::eval::BaseModel;
use vaxcast::features::{build_design, Design};
use vaxcast::ingest::{
    aggregate_categories, parse_clinical_csv, repair_censoring, standardize_batches, CategoryMap,
    TrendsBatch, DEFAULT_REFERENCE,
};
use vaxcast::series::{to_ratio, DatedSeries};

/// Everything the modeling stages consume, at full precision.
pub struct Prepared {
    /// Daily vaccination-to-expectation ratio (the target).
    pub ratio: DatedSeries,
    /// Lagged attitude design matrix plus the aligned target.
    pub design: Design,
    /// Censored cells replaced across all ingested batches.
    pub repairs: usize,
}

/// Runs ingestion end to end: clinical counts → ratio, batched web-search
/// exports → repaired, standardized, category-aggregated attitude signals →
/// lagged design matrix aligned with the ratio.
pub fn prepare(config: &PipelineConfig) -> Result<Prepared> {
    config.validate_inputs()?;

    let clinical = parse_clinical_csv(&config.paths.clinical)
        .with_context(|| format!("reading {}", config.paths.clinical.display()))?;
    let ratio = to_ratio(&clinical, &config.population)?;

    let mut repairs = 0usize;
    let mut batches = Vec::with_capacity(config.paths.trends.len());
    for path in &config.paths.trends {
        let batch = TrendsBatch::from_path(path, DEFAULT_REFERENCE)
            .with_context(|| format!("reading {}", path.display()))?;
        let (repaired, n) = repair_censoring(&batch);
        repairs += n;
        batches.push(repaired);
    }
    let standardized = standardize_batches(&batches)?;

    let map = match &config.paths.category_map {
        Some(path) => CategoryMap::from_path(path)
            .with_context(|| format!("reading {}", path.display()))?,
        None => CategoryMap::bundled(),
    };
    let attitudes = aggregate_categories(&standardized, &map)?;

    let signals: Vec<DatedSeries> = attitudes.as_array().into_iter().cloned().collect();
    let design = build_design(&signals, &ratio, config.feature_lag)?;
    Ok(Prepared {
        ratio,
        design,
        repairs,
    })
}

/// Persisted model file name for one base-model family.
pub fn model_file(family: BaseModel) -> &'static str {
    match family {
        BaseModel::Ar => "ar.json",
        BaseModel::Arima => "arima.json",
        BaseModel::Ols => "ols.json",
        BaseModel::Lasso => "lasso.json",
        BaseModel::Boost => "boost.json",
        BaseModel::RandomForest => "forest.json",
    }
}

pub fn models_dir(out: &Path) -> PathBuf {
    out.join("models")
}

pub fn model_path(out: &Path, family: BaseModel) -> PathBuf {
    models_dir(out).join(model_file(family))
}

pub fn ratio_path(out: &Path) -> PathBuf {
    out.join("ratio.csv")
}

pub fn features_path(out: &Path) -> PathBuf {
    out.join("features.csv")
}

pub fn best_stack_path(out: &Path) -> PathBuf {
    out.join("best_stack.json")
}

/// Writes a text artifact, creating parent directories as needed.
pub fn write_artifact(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads a prerequisite artifact, pointing at the stage that produces it
/// when the file is missing.
pub fn read_prerequisite(path: &Path, produced_by: &str) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| {
        format!(
            "missing prerequisite {} (run `vaxcast {produced_by}` first)",
            path.display()
        )
    })
}
