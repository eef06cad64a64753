//! Subcommand implementations.
//!
//! Every command loads the config (with `--set`/`--seed`/`--out` applied),
//! re-runs the deterministic preparation stage it needs, and writes its
//! artifacts under the configured output directory. Commands return
//! [`Outcome::Partial`] when they complete but record per-model failures;
//! hard errors (bad config, missing files, missing prerequisites) bubble up
//! as `Err` and exit with code 2.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vaxcast::arima::{self, ArimaFit, ModelScore};
use vaxcast::config::PipelineConfig;
use vaxcast::diagnostics::segment_trend;
use vaxcast::eval::{
    compare_models, csv_field, fit_clinical_model, fit_web_model, holdout_split,
    prepare_web_inputs, BaseModel, EvalReport, StackInfo, WebModel,
};
use vaxcast::ingest::corpus_keywords;
use vaxcast::learn::predict;
use vaxcast::stack::stack_predict;

use crate::pipeline::{
    best_stack_path, features_path, model_path, models_dir, prepare, ratio_path, read_prerequisite,
    write_artifact,
};
use crate::{Cli, Command, Outcome, Which};

/// The winning stack as persisted by `evaluate` and consumed by `forecast`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestStack {
    pub label: String,
    #[serde(flatten)]
    pub info: StackInfo,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Prep => cmd_prep(&load_config(&cli)?),
        Command::Fit { which } => cmd_fit(&load_config(&cli)?, *which),
        Command::Evaluate => cmd_evaluate(&load_config(&cli)?),
        Command::Forecast {
            horizon,
            clinical_only,
        } => cmd_forecast(&load_config(&cli)?, *horizon, *clinical_only),
        Command::Keywords { files, output } => cmd_keywords(&cli, files, output.as_deref()),
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::load(&cli.config, &cli.set)
        .with_context(|| format!("loading {}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    Ok(config)
}

fn pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn cmd_prep(config: &PipelineConfig) -> Result<Outcome> {
    let prepared = prepare(config)?;
    write_artifact(&ratio_path(&config.out), &prepared.ratio.to_csv())?;
    write_artifact(&features_path(&config.out), &prepared.design.features.to_csv())?;
    for warning in &prepared.design.warnings {
        eprintln!("warning: {warning}");
    }
    println!("repaired {} censored cells", prepared.repairs);
    println!(
        "aligned {} feature rows against {} target days ({} lost to the {}-day lag)",
        prepared.design.features.n_rows(),
        prepared.ratio.len(),
        prepared.ratio.len() - prepared.design.features.n_rows(),
        config.feature_lag,
    );
    println!("wrote {}", ratio_path(&config.out).display());
    println!("wrote {}", features_path(&config.out).display());
    Ok(Outcome::Clean)
}

fn cmd_fit(config: &PipelineConfig, which: Which) -> Result<Outcome> {
    // The prep artifacts are this stage's declared prerequisite even though
    // fitting re-ingests the raw inputs at full precision.
    for prereq in [ratio_path(&config.out), features_path(&config.out)] {
        if !prereq.is_file() {
            bail!(
                "missing prerequisite {} (run `vaxcast prep` first)",
                prereq.display()
            );
        }
    }

    let prepared = prepare(config)?;
    let params = config.compare_params();
    let (train, holdout) = holdout_split(&prepared.ratio, &params.split)?;

    let wants = |family: BaseModel| {
        config.roster.contains(&family)
            && match which {
                Which::All => true,
                Which::Clinical => family.is_clinical(),
                Which::Web => !family.is_clinical(),
            }
    };

    let mut failures: BTreeMap<String, String> = BTreeMap::new();
    let mut fitted = 0usize;
    // Candidate score table: the mixed-order grid when it was searched,
    // otherwise the pure-autoregression grid.
    let mut score_table: Option<Vec<ModelScore>> = None;

    for family in BaseModel::CLINICAL {
        if !wants(family) {
            continue;
        }
        match fit_clinical_model(&train, family, &params) {
            Ok((fit, scores)) => {
                let path = model_path(&config.out, family);
                write_artifact(&path, &pretty_json(&fit)?)?;
                println!("fit {}: ok → {}", fit.spec.label(), path.display());
                if family == BaseModel::Arima || score_table.is_none() {
                    score_table = Some(scores);
                }
                fitted += 1;
            }
            Err(err) => {
                eprintln!("fit {}: failed: {err}", family.family_label());
                failures.insert(family.family_label().to_string(), err.to_string());
            }
        }
    }

    let web_requested: Vec<BaseModel> = BaseModel::WEB
        .iter()
        .copied()
        .filter(|f| wants(*f))
        .collect();
    if !web_requested.is_empty() {
        match prepare_web_inputs(&train, &holdout, &prepared.design.features) {
            Ok((x_train, y_train, _x_hold)) => {
                for family in web_requested {
                    match fit_web_model(&x_train, &y_train, family, &params) {
                        Ok(model) => {
                            let path = model_path(&config.out, family);
                            write_artifact(&path, &pretty_json(&model)?)?;
                            println!("fit {}: ok → {}", family.family_label(), path.display());
                            fitted += 1;
                        }
                        Err(err) => {
                            eprintln!("fit {}: failed: {err}", family.family_label());
                            failures.insert(family.family_label().to_string(), err.to_string());
                        }
                    }
                }
            }
            Err(err) => {
                for family in web_requested {
                    eprintln!("fit {}: failed: {err}", family.family_label());
                    failures.insert(family.family_label().to_string(), err.to_string());
                }
            }
        }
    }

    if let Some(scores) = &score_table {
        let mut csv = String::from("model,aic,bic,dof\n");
        for score in scores {
            csv.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                csv_field(&score.spec.label()),
                score.aic,
                score.bic,
                score.dof
            ));
        }
        let path = config.out.join("model_scores.csv");
        write_artifact(&path, &csv)?;
        println!("wrote {} ({} candidates)", path.display(), scores.len());
    }

    let failures_path = config.out.join("fit_failures.json");
    write_artifact(&failures_path, &pretty_json(&failures)?)?;
    println!(
        "fitted {fitted} model(s), {} failure(s) → {}",
        failures.len(),
        failures_path.display()
    );

    Ok(if failures.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Partial
    })
}

fn cmd_evaluate(config: &PipelineConfig) -> Result<Outcome> {
    let models = models_dir(&config.out);
    if !models.is_dir() {
        bail!(
            "missing prerequisite {} (run `vaxcast fit` first)",
            models.display()
        );
    }

    let prepared = prepare(config)?;
    let params = config.compare_params();
    let report = compare_models(
        &prepared.ratio,
        &prepared.design.features,
        &config.roster,
        &params,
    )?;

    print!("{}", report.text_table());

    let single = config.out.join("rmse_single.csv");
    write_artifact(&single, &report.single_csv())?;
    let stacked = config.out.join("rmse_stacked.csv");
    write_artifact(&stacked, &report.stacked_csv())?;
    let holdout = config.out.join("holdout_predictions.csv");
    write_artifact(&holdout, &report.holdout_csv())?;
    for path in [&single, &stacked, &holdout] {
        println!("wrote {}", path.display());
    }

    match report.forecast_summary_csv() {
        Ok(csv) => {
            let path = config.out.join("forecast_7day.csv");
            write_artifact(&path, &csv)?;
            println!("wrote {}", path.display());
        }
        Err(err) => eprintln!("skipping forecast_7day.csv: {err}"),
    }

    let trend = segment_trend(
        &prepared.ratio,
        &config.trend.breakpoints,
        config.trend.steady_threshold,
    )?;
    let mut trend_csv = String::from("start,end,tau,label\n");
    for segment in &trend.segments {
        trend_csv.push_str(&format!(
            "{},{},{:.6},{}\n",
            segment.start, segment.end, segment.tau, segment.label
        ));
    }
    let trend_path = config.out.join("trend_segments.csv");
    write_artifact(&trend_path, &trend_csv)?;
    println!("wrote {}", trend_path.display());

    let report_path = config.out.join("eval_report.json");
    write_artifact(&report_path, &pretty_json(&report)?)?;
    println!("wrote {}", report_path.display());

    match best_stack(&report) {
        Some(best) => {
            let path = best_stack_path(&config.out);
            write_artifact(&path, &pretty_json(&best)?)?;
            println!("wrote {}", path.display());
        }
        None => eprintln!("skipping best_stack.json: no stacked model succeeded"),
    }

    Ok(if report.rows.iter().any(|r| r.note.is_some()) {
        Outcome::Partial
    } else {
        Outcome::Clean
    })
}

fn best_stack(report: &EvalReport) -> Option<BestStack> {
    let row = report.best_stack_row()?;
    Some(BestStack {
        label: row.label.clone(),
        info: row.stack.clone()?,
    })
}

fn cmd_forecast(config: &PipelineConfig, horizon: usize, clinical_only: bool) -> Result<Outcome> {
    let best_text = read_prerequisite(&best_stack_path(&config.out), "evaluate")?;
    let best: BestStack = serde_json::from_str(&best_text)
        .with_context(|| format!("parsing {}", best_stack_path(&config.out).display()))?;
    let clinical_path = model_path(&config.out, best.info.clinical);
    let fit: ArimaFit = serde_json::from_str(&read_prerequisite(&clinical_path, "fit")?)
        .with_context(|| format!("parsing {}", clinical_path.display()))?;

    let forecast_path = config.out.join("forecast.csv");
    if horizon == 0 {
        write_artifact(&forecast_path, "date,forecast\n")?;
        println!("wrote {} (0 days)", forecast_path.display());
        return Ok(Outcome::Clean);
    }

    let clinical_fc = arima::forecast(&fit, horizon)?;
    let combined = if clinical_only {
        // Degenerate stack weights (0, 1, 0): the combined forecast is the
        // clinical path itself, so no web features are required.
        clinical_fc
    } else {
        let web_path = model_path(&config.out, best.info.web);
        let web_model: WebModel = serde_json::from_str(&read_prerequisite(&web_path, "fit")?)
            .with_context(|| format!("parsing {}", web_path.display()))?;
        let prepared = prepare(config)?;
        let features = &prepared.design.features;
        let missing: Vec<String> = (0..clinical_fc.len())
            .map(|i| clinical_fc.date_at(i))
            .filter(|d| features.index_of(*d).is_none())
            .map(|d| d.to_string())
            .collect();
        if !missing.is_empty() {
            bail!("web features are missing forecast dates: {}", missing.join(", "));
        }
        let x = features.slice_dates(clinical_fc.start_date(), clinical_fc.end_date())?;
        let web_fc = predict(&web_model, &x)?;
        stack_predict(&best.info.weights, &clinical_fc, &web_fc)?
    };

    let mut csv = String::from("date,forecast\n");
    for (date, value) in combined.iter() {
        csv.push_str(&format!("{date},{value:.6}\n"));
    }
    write_artifact(&forecast_path, &csv)?;
    println!(
        "wrote {} ({} days from {}, {})",
        forecast_path.display(),
        combined.len(),
        combined.start_date(),
        if clinical_only {
            "clinical only".to_string()
        } else {
            best.label.clone()
        }
    );
    Ok(Outcome::Clean)
}

fn cmd_keywords(cli: &Cli, files: &[PathBuf], output: Option<&Path>) -> Result<Outcome> {
    let mut texts = Vec::with_capacity(files.len());
    for file in files {
        texts.push(
            fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?,
        );
    }
    let documents: Vec<&str> = texts
        .iter()
        .flat_map(|t| t.lines())
        .filter(|line| !line.trim().is_empty())
        .collect();
    let (table, replacements) = corpus_keywords(documents.iter().copied());

    let path = match output {
        Some(p) => p.to_path_buf(),
        None => load_config(cli)?.out.join("keywords.csv"),
    };
    write_artifact(&path, &table.to_csv())?;
    println!(
        "{} documents → {} keywords ({} replacement characters)",
        documents.len(),
        table.len(),
        replacements
    );
    println!("wrote {}", path.display());
    Ok(Outcome::Clean)
}
