//! Holdout evaluation and the cross-model comparison table.
//!
//! [`holdout_split`] cuts a daily target into a contiguous training window
//! and a holdout window with no overlap. [`compare_models`] then fits every
//! requested base model — autoregressions on the target itself ("clinical"
//! rows) and feature regressions on web-attitude signals ("web" rows) —
//! combines each clinical/web pair through both stacking methods, and
//! scores everything on the same holdout via [`rmse`].
//!
//! The report lists one row per candidate in a fixed structural order
//! (clinical, web, then least-squares stacks, then tube-loss stacks), so
//! output files are byte-stable across runs and thread counts. A fit
//! failure is recorded on its own row (and on the stacks that needed it)
//! without discarding the rest of the table.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::arima::{
    self, ArimaFit, ModelScore, SelectionCriterion, DEFAULT_P_CANDIDATES, DEFAULT_Q_CANDIDATES,
};
use crate::error::Error;
use crate::Result;
use crate::features::FeatureMatrix;
use crate::learn::{
    cross_validate, fit_boost, fit_forest, fit_lasso, fit_ols, lambda_grid, lambda_max, predict,
    BoostParams, FoldMode, ForestParams, LinearModel, Predictor, TreeEnsembleModel,
};
use crate::series::{DatedSeries, CSV_DECIMALS};
use crate::stack::{stack_ols, stack_predict, stack_svr, StackMethod, StackWeights, SvrParams};

/// Root-mean-square error between a prediction and the actual series.
///
/// Both series must cover exactly the same dates; the caller is expected
/// to have aligned them (that is the whole point of dated series).
pub fn rmse(predicted: &DatedSeries, actual: &DatedSeries) -> Result<f64> {
    if !predicted.same_dates(actual) {
        return Err(Error::domain(format!(
            "rmse needs identical dates: `{}` covers {}..={} but `{}` covers {}..={}",
            predicted.name(),
            predicted.start_date(),
            predicted.end_date(),
            actual.name(),
            actual.start_date(),
            actual.end_date(),
        )));
    }
    let sum: f64 = predicted
        .values()
        .iter()
        .zip(actual.values())
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sum / predicted.len() as f64).sqrt())
}

/// Contiguous train/holdout split of a daily series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    /// Observations in the training window (taken from the start).
    pub train_len: usize,
    /// Observations in the holdout window that follows immediately.
    pub test_len: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_len: 212,
            test_len: 7,
        }
    }
}

/// Splits `series` into `(train, holdout)` per `split`.
///
/// The series length must equal `train_len + test_len` exactly, so the two
/// pieces concatenate back to the original — no observation is silently
/// dropped and none is shared.
pub fn holdout_split(series: &DatedSeries, split: &SplitSpec) -> Result<(DatedSeries, DatedSeries)> {
    if split.train_len == 0 || split.test_len == 0 {
        return Err(Error::domain(
            "both split lengths must be at least 1 observation",
        ));
    }
    let expected = split.train_len + split.test_len;
    if series.len() != expected {
        return Err(Error::domain(format!(
            "series `{}` has {} observations but the split needs exactly {} ({} train + {} holdout)",
            series.name(),
            series.len(),
            expected,
            split.train_len,
            split.test_len,
        )));
    }
    let train = series.slice(0, split.train_len)?;
    let holdout = series.slice(split.train_len, split.test_len)?;
    Ok((train, holdout))
}

/// Base model families that can enter the comparison roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseModel {
    /// Pure autoregression on the target series (order selected by grid).
    Ar,
    /// Mixed autoregressive / moving-average model on the target series.
    Arima,
    /// Least squares on the web-attitude features.
    Ols,
    /// L1-penalized least squares, penalty chosen by cross-validation.
    Lasso,
    /// Gradient-boosted regression trees.
    Boost,
    /// Bootstrap-aggregated randomized trees.
    RandomForest,
}

impl BaseModel {
    /// Every family, in the fixed table order.
    pub const ALL: [BaseModel; 6] = [
        BaseModel::Ar,
        BaseModel::Arima,
        BaseModel::Ols,
        BaseModel::Lasso,
        BaseModel::Boost,
        BaseModel::RandomForest,
    ];

    /// The autoregressive families, in table order.
    pub const CLINICAL: [BaseModel; 2] = [BaseModel::Ar, BaseModel::Arima];
    /// The feature-regression families, in table order.
    pub const WEB: [BaseModel; 4] = [
        BaseModel::Ols,
        BaseModel::Lasso,
        BaseModel::Boost,
        BaseModel::RandomForest,
    ];

    /// Family name as it appears inside stacked row labels.
    pub fn family_label(self) -> &'static str {
        match self {
            BaseModel::Ar => "AR",
            BaseModel::Arima => "ARIMA",
            BaseModel::Ols => "OLS",
            BaseModel::Lasso => "LASSO",
            BaseModel::Boost => "Boost",
            BaseModel::RandomForest => "RandomForest",
        }
    }

    /// True for the families fitted on the target series itself.
    pub fn is_clinical(self) -> bool {
        matches!(self, BaseModel::Ar | BaseModel::Arima)
    }
}

/// Everything [`compare_models`] needs besides the data and the roster.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareParams {
    /// Train/holdout split applied to the target series.
    pub split: SplitSpec,
    /// AR-order candidates for both autoregressive families.
    pub p_candidates: Vec<usize>,
    /// MA-order candidates for the mixed family (the pure AR grid uses 0).
    pub q_candidates: Vec<usize>,
    /// Score used to pick the winning order.
    pub criterion: SelectionCriterion,
    /// Number of points on the log-spaced L1-penalty grid.
    pub lasso_grid_points: usize,
    /// Smallest grid penalty as a fraction of the all-zero penalty.
    pub lasso_min_ratio: f64,
    /// Cross-validation folds for the penalty search.
    pub cv_folds: usize,
    /// Fold layout for the penalty search.
    pub fold_mode: FoldMode,
    /// Boosting hyperparameters (its seed field is replaced by `seed`).
    pub boost: BoostParams,
    /// Forest hyperparameters (its seed field is replaced by `seed`).
    pub forest: ForestParams,
    /// Tube-loss stacking hyperparameters.
    pub svr: SvrParams,
    /// Master seed for every randomized step.
    pub seed: u64,
}

impl Default for CompareParams {
    fn default() -> Self {
        Self {
            split: SplitSpec::default(),
            p_candidates: DEFAULT_P_CANDIDATES.to_vec(),
            q_candidates: DEFAULT_Q_CANDIDATES.to_vec(),
            criterion: SelectionCriterion::default(),
            lasso_grid_points: 50,
            lasso_min_ratio: 1e-4,
            cv_folds: 10,
            fold_mode: FoldMode::default(),
            boost: BoostParams::default(),
            forest: ForestParams::default(),
            svr: SvrParams::default(),
            seed: 0,
        }
    }
}

/// Where a row's predictions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowSource {
    /// Autoregression on the target series.
    Clinical,
    /// Regression on the web-attitude features.
    Web,
    /// Combination of one clinical and one web model.
    Stack,
}

impl std::fmt::Display for RowSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowSource::Clinical => write!(f, "clinical"),
            RowSource::Web => write!(f, "web"),
            RowSource::Stack => write!(f, "stack"),
        }
    }
}

/// Provenance and fitted weights of one successful stacked row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackInfo {
    pub method: StackMethod,
    /// Clinical input family ([`BaseModel::Ar`] or [`BaseModel::Arima`]).
    pub clinical: BaseModel,
    /// Web input family.
    pub web: BaseModel,
    pub weights: StackWeights,
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// Model label, e.g. `ARIMA(7,0,8)` or `SVR[ARIMA + Boost]`.
    pub label: String,
    pub source: RowSource,
    /// Base family for clinical/web rows; absent on stacked rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<BaseModel>,
    /// Holdout RMSE; absent when the fit failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    /// Failure description when `rmse` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Method, inputs, and fitted weights for successful stacked rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<StackInfo>,
}

/// Holdout predictions of one successful model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionColumn {
    pub label: String,
    pub values: Vec<f64>,
}

/// Per-date actuals and predictions over the holdout window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutTable {
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    /// One column per successful row, in table order.
    pub predictions: Vec<PredictionColumn>,
}

/// Output of [`compare_models`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// One row per candidate, in fixed structural order.
    pub rows: Vec<EvalRow>,
    /// Label of the lowest-RMSE row; `None` when every fit failed.
    pub best: Option<String>,
    pub holdout_table: HoldoutTable,
}

/// Quotes a value for a comma-separated file (labels such as
/// `ARIMA(7,0,8)` contain commas).
/// Quotes one CSV field when it contains a comma or a quote (model labels
/// like `ARIMA(1,0,2)` need this).
pub fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn fmt_cell(value: f64) -> String {
    format!("{value:.CSV_DECIMALS$}")
}

impl EvalReport {
    fn best_of(&self, keep: impl Fn(&EvalRow) -> bool) -> Option<&EvalRow> {
        let mut best: Option<&EvalRow> = None;
        for row in self.rows.iter().filter(|r| keep(r)) {
            let Some(value) = row.rmse else { continue };
            match best.and_then(|b| b.rmse) {
                Some(current) if value >= current => {}
                _ => best = Some(row),
            }
        }
        best
    }

    /// Lowest-RMSE stacked row, if any stack succeeded.
    pub fn best_stack_row(&self) -> Option<&EvalRow> {
        self.best_of(|r| r.source == RowSource::Stack)
    }

    /// Lowest-RMSE clinical row, if any autoregression succeeded.
    pub fn best_clinical_row(&self) -> Option<&EvalRow> {
        self.best_of(|r| r.source == RowSource::Clinical)
    }

    /// Row with the given label.
    pub fn row(&self, label: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Holdout predictions of the row with the given label.
    pub fn prediction(&self, label: &str) -> Option<&[f64]> {
        self.holdout_table
            .predictions
            .iter()
            .find(|c| c.label == label)
            .map(|c| c.values.as_slice())
    }

    /// Base rows only, as `model,source,rmse` CSV (failed rows keep an
    /// empty RMSE cell; the note lives in the JSON report).
    pub fn single_csv(&self) -> String {
        let mut out = String::from("model,source,rmse\n");
        for row in self.rows.iter().filter(|r| r.source != RowSource::Stack) {
            let cell = row.rmse.map(fmt_cell).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", csv_field(&row.label), row.source, cell));
        }
        out
    }

    /// Every row, as `model,rmse` CSV.
    pub fn stacked_csv(&self) -> String {
        let mut out = String::from("model,rmse\n");
        for row in &self.rows {
            let cell = row.rmse.map(fmt_cell).unwrap_or_default();
            out.push_str(&format!("{},{}\n", csv_field(&row.label), cell));
        }
        out
    }

    /// Full holdout matrix: `date,actual,<one column per successful row>`.
    pub fn holdout_csv(&self) -> String {
        let mut out = String::from("date,actual");
        for column in &self.holdout_table.predictions {
            out.push(',');
            out.push_str(&csv_field(&column.label));
        }
        out.push('\n');
        for (i, date) in self.holdout_table.dates.iter().enumerate() {
            out.push_str(&format!("{date},{}", fmt_cell(self.holdout_table.actual[i])));
            for column in &self.holdout_table.predictions {
                out.push(',');
                out.push_str(&fmt_cell(column.values[i]));
            }
            out.push('\n');
        }
        out
    }

    /// The headline per-date table: actuals, the best clinical model, and
    /// the best stack, as `date,actual,clinical,best_stack` CSV.
    pub fn forecast_summary_csv(&self) -> Result<String> {
        let clinical = self
            .best_clinical_row()
            .ok_or_else(|| Error::domain("no clinical model succeeded; cannot summarize"))?;
        let stack = self
            .best_stack_row()
            .ok_or_else(|| Error::domain("no stacked model succeeded; cannot summarize"))?;
        let clinical_pred = self.prediction(&clinical.label).ok_or_else(|| {
            Error::domain(format!("row `{}` has no holdout column", clinical.label))
        })?;
        let stack_pred = self
            .prediction(&stack.label)
            .ok_or_else(|| Error::domain(format!("row `{}` has no holdout column", stack.label)))?;
        let mut out = String::from("date,actual,clinical,best_stack\n");
        for (i, date) in self.holdout_table.dates.iter().enumerate() {
            out.push_str(&format!(
                "{date},{},{},{}\n",
                fmt_cell(self.holdout_table.actual[i]),
                fmt_cell(clinical_pred[i]),
                fmt_cell(stack_pred[i]),
            ));
        }
        Ok(out)
    }

    /// Human-readable table for terminal output.
    pub fn text_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(0)
            .max("model".len());
        let mut out = format!("{:<width$}  {:>12}\n", "model", "rmse");
        for row in &self.rows {
            match row.rmse {
                Some(value) => {
                    out.push_str(&format!("{:<width$}  {:>12.6}\n", row.label, value));
                }
                None => {
                    let note = row.note.as_deref().unwrap_or("unknown failure");
                    out.push_str(&format!("{:<width$}  {:>12}  ({note})\n", row.label, "failed"));
                }
            }
        }
        if let Some(best) = &self.best {
            out.push_str(&format!("\nbest: {best}\n"));
        }
        out
    }
}

/// A fitted clinical (autoregressive) candidate, ready for stacking.
struct ClinicalOutcome {
    label: String,
    /// One-step-ahead in-sample predictions over the training window.
    insample: DatedSeries,
    /// Forecast over the holdout window.
    holdout_pred: DatedSeries,
}

/// A fitted web (feature-regression) candidate, ready for stacking.
struct WebOutcome {
    insample: DatedSeries,
    holdout_pred: DatedSeries,
}

/// Fits every roster model on the training window, stacks each
/// clinical/web pair with both stacking methods, and scores everything on
/// the holdout window.
///
/// With the full six-family roster this produces 22 rows: 6 base models
/// plus {AR, ARIMA} x {OLS, LASSO, Boost, RandomForest} x {least-squares
/// stack, tube-loss stack}. Rows appear in that fixed order regardless of
/// roster order, so repeated runs emit byte-identical reports. A failed
/// fit is reported on its row (and on dependent stack rows) while the rest
/// of the table is still produced.
pub fn compare_models(
    series: &DatedSeries,
    features: &FeatureMatrix,
    roster: &[BaseModel],
    params: &CompareParams,
) -> Result<EvalReport> {
    if roster.is_empty() {
        return Err(Error::domain("the model roster must not be empty"));
    }
    let mut requested = BTreeSet::new();
    for model in roster {
        if !requested.insert(*model) {
            return Err(Error::domain(format!(
                "duplicate roster entry `{}`",
                model.family_label()
            )));
        }
    }
    if params.lasso_grid_points < 2 {
        return Err(Error::domain("the penalty grid needs at least 2 points"));
    }
    if !(params.lasso_min_ratio > 0.0 && params.lasso_min_ratio < 1.0) {
        return Err(Error::domain(
            "the smallest penalty ratio must lie strictly between 0 and 1",
        ));
    }

    let (train, holdout) = holdout_split(series, &params.split)?;

    // Clinical candidates: grid-search the order, then keep the winner's
    // in-sample one-step predictions (actual minus innovation) and its
    // holdout forecast.
    let mut clinical: BTreeMap<BaseModel, std::result::Result<ClinicalOutcome, String>> =
        BTreeMap::new();
    for family in BaseModel::CLINICAL {
        if requested.contains(&family) {
            let outcome = fit_clinical(&train, family, params).map_err(|e| e.to_string());
            clinical.insert(family, outcome);
        }
    }

    // Web candidates share one aligned design: training rows are the
    // feature dates that fall inside the training window, and holdout rows
    // must cover every holdout date.
    let mut web: BTreeMap<BaseModel, std::result::Result<WebOutcome, String>> = BTreeMap::new();
    if BaseModel::WEB.iter().any(|f| requested.contains(f)) {
        match prepare_web_inputs(&train, &holdout, features) {
            Ok((x_train, y_train, x_hold)) => {
                for family in BaseModel::WEB {
                    if requested.contains(&family) {
                        let outcome = fit_web(&x_train, &y_train, &x_hold, family, params)
                            .map_err(|e| e.to_string());
                        web.insert(family, outcome);
                    }
                }
            }
            Err(err) => {
                let message = err.to_string();
                for family in BaseModel::WEB {
                    if requested.contains(&family) {
                        web.insert(family, Err(message.clone()));
                    }
                }
            }
        }
    }

    let mut rows = Vec::new();
    let mut predictions = Vec::new();
    let mut record = |label: String,
                      source: RowSource,
                      family: Option<BaseModel>,
                      outcome: std::result::Result<DatedSeries, String>,
                      stack: Option<StackInfo>| {
        match outcome {
            Ok(pred) => match rmse(&pred, &holdout) {
                Ok(value) => {
                    predictions.push(PredictionColumn {
                        label: label.clone(),
                        values: pred.values().to_vec(),
                    });
                    rows.push(EvalRow {
                        label,
                        source,
                        family,
                        rmse: Some(value),
                        note: None,
                        stack,
                    });
                }
                Err(err) => rows.push(EvalRow {
                    label,
                    source,
                    family,
                    rmse: None,
                    note: Some(err.to_string()),
                    stack: None,
                }),
            },
            Err(note) => rows.push(EvalRow {
                label,
                source,
                family,
                rmse: None,
                note: Some(note),
                stack: None,
            }),
        }
    };

    for family in BaseModel::CLINICAL {
        if let Some(outcome) = clinical.get(&family) {
            match outcome {
                Ok(fit) => record(
                    fit.label.clone(),
                    RowSource::Clinical,
                    Some(family),
                    Ok(fit.holdout_pred.clone()),
                    None,
                ),
                Err(note) => record(
                    family.family_label().to_string(),
                    RowSource::Clinical,
                    Some(family),
                    Err(note.clone()),
                    None,
                ),
            }
        }
    }
    for family in BaseModel::WEB {
        if let Some(outcome) = web.get(&family) {
            let label = family.family_label().to_string();
            match outcome {
                Ok(fit) => record(
                    label,
                    RowSource::Web,
                    Some(family),
                    Ok(fit.holdout_pred.clone()),
                    None,
                ),
                Err(note) => record(label, RowSource::Web, Some(family), Err(note.clone()), None),
            }
        }
    }
    for method in [StackMethod::Ols, StackMethod::Svr] {
        let method_label = match method {
            StackMethod::Ols => "OLS",
            StackMethod::Svr => "SVR",
        };
        for clinical_family in BaseModel::CLINICAL {
            let Some(clinical_outcome) = clinical.get(&clinical_family) else {
                continue;
            };
            for web_family in BaseModel::WEB {
                let Some(web_outcome) = web.get(&web_family) else {
                    continue;
                };
                let label = format!(
                    "{method_label}[{} + {}]",
                    clinical_family.family_label(),
                    web_family.family_label()
                );
                let outcome = match (clinical_outcome, web_outcome) {
                    (Ok(c), Ok(w)) => {
                        build_stack(method, c, w, &train, &params.svr).map_err(|e| e.to_string())
                    }
                    (Err(note), _) => Err(format!(
                        "clinical input {} failed: {note}",
                        clinical_family.family_label()
                    )),
                    (_, Err(note)) => Err(format!(
                        "web input {} failed: {note}",
                        web_family.family_label()
                    )),
                };
                match outcome {
                    Ok((weights, pred)) => {
                        let info = StackInfo {
                            method,
                            clinical: clinical_family,
                            web: web_family,
                            weights,
                        };
                        record(label, RowSource::Stack, None, Ok(pred), Some(info));
                    }
                    Err(note) => record(label, RowSource::Stack, None, Err(note), None),
                }
            }
        }
    }

    let holdout_table = HoldoutTable {
        dates: (0..holdout.len()).map(|i| holdout.date_at(i)).collect(),
        actual: holdout.values().to_vec(),
        predictions,
    };
    let report = EvalReport {
        best: None,
        rows,
        holdout_table,
    };
    let best = report.best_of(|_| true).map(|r| r.label.clone());
    Ok(EvalReport { best, ..report })
}

/// Grid-searches the autoregressive order for one clinical family exactly
/// as [`compare_models`] does internally, returning the winning fit and the
/// candidate score table. The pure-autoregression family restricts the grid
/// to `q = 0`; the mixed family searches the full `p × q` grid.
pub fn fit_clinical_model(
    train: &DatedSeries,
    family: BaseModel,
    params: &CompareParams,
) -> Result<(ArimaFit, Vec<ModelScore>)> {
    let q_candidates: Vec<usize> = match family {
        BaseModel::Ar => vec![0],
        BaseModel::Arima => params.q_candidates.clone(),
        other => {
            return Err(Error::domain(format!(
                "`{}` is not an autoregressive family",
                other.family_label()
            )))
        }
    };
    arima::select_model(train, &params.p_candidates, &q_candidates, params.criterion)
}

fn fit_clinical(
    train: &DatedSeries,
    family: BaseModel,
    params: &CompareParams,
) -> Result<ClinicalOutcome> {
    let (fit, _scores) = fit_clinical_model(train, family, params)?;
    // The filter innovations are one-step-ahead errors, so the in-sample
    // prediction at each date is the observed value minus its innovation.
    let offset = fit.spec.d;
    let values: Vec<f64> = train.values()[offset..]
        .iter()
        .zip(&fit.residuals)
        .map(|(y, r)| y - r)
        .collect();
    let insample = DatedSeries::new(train.date_at(offset), "in_sample", values)?;
    let holdout_pred = arima::forecast(&fit, params.split.test_len)?;
    Ok(ClinicalOutcome {
        label: fit.spec.label(),
        insample,
        holdout_pred,
    })
}

/// Aligns the feature matrix with a train/holdout split the way
/// [`compare_models`] does: training rows are the feature dates inside the
/// training window (which must reach the window's end), and the features
/// must cover every holdout date. Returns the training design, the aligned
/// training target values, and the holdout design.
pub fn prepare_web_inputs(
    train: &DatedSeries,
    holdout: &DatedSeries,
    features: &FeatureMatrix,
) -> Result<(FeatureMatrix, Vec<f64>, FeatureMatrix)> {
    let x_train = features.slice_dates(train.start_date(), train.end_date())?;
    if x_train.end_date() != train.end_date() {
        return Err(Error::domain(format!(
            "feature rows stop at {} but the training window ends {}",
            x_train.end_date(),
            train.end_date(),
        )));
    }
    let y_train = train.window(x_train.start_date(), x_train.end_date())?;
    let covered = |date: NaiveDate| {
        features.start_date() <= date && date <= features.end_date()
    };
    let missing: Vec<String> = (0..holdout.len())
        .map(|i| holdout.date_at(i))
        .filter(|d| !covered(*d))
        .map(|d| d.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::domain(format!(
            "web features are missing holdout dates: {}",
            missing.join(", ")
        )));
    }
    let x_hold = features.slice_dates(holdout.start_date(), holdout.end_date())?;
    Ok((x_train, y_train.values().to_vec(), x_hold))
}

/// A fitted feature-regression learner in persistable form.
///
/// The JSON tag is `learner` (ensemble payloads keep their own `kind`
/// field distinguishing boosted from bagged trees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum WebModel {
    Linear(LinearModel),
    Ensemble(TreeEnsembleModel),
}

impl Predictor for WebModel {
    fn feature_columns(&self) -> &[String] {
        match self {
            WebModel::Linear(m) => m.feature_columns(),
            WebModel::Ensemble(m) => m.feature_columns(),
        }
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            WebModel::Linear(m) => m.predict_row(row),
            WebModel::Ensemble(m) => m.predict_row(row),
        }
    }
}

/// Fits one feature-regression family exactly as [`compare_models`] does
/// internally: plain least squares, cross-validated L1 penalty, or a tree
/// ensemble seeded from `params.seed`.
pub fn fit_web_model(
    x_train: &FeatureMatrix,
    y_train: &[f64],
    family: BaseModel,
    params: &CompareParams,
) -> Result<WebModel> {
    match family {
        BaseModel::Ols => Ok(WebModel::Linear(fit_ols(x_train, y_train)?)),
        BaseModel::Lasso => {
            let max = lambda_max(x_train, y_train)?;
            let grid = lambda_grid(max, params.lasso_grid_points, params.lasso_min_ratio);
            let report = cross_validate(
                x_train,
                y_train,
                &grid,
                params.cv_folds,
                params.fold_mode,
                params.seed,
                |x_fit, y_fit, x_val, lambda| {
                    let model = fit_lasso(x_fit, y_fit, *lambda)?;
                    Ok(predict(&model, x_val)?.values().to_vec())
                },
            )?;
            Ok(WebModel::Linear(fit_lasso(
                x_train,
                y_train,
                grid[report.chosen],
            )?))
        }
        BaseModel::Boost => {
            let boost_params = BoostParams {
                seed: params.seed,
                ..params.boost
            };
            Ok(WebModel::Ensemble(fit_boost(x_train, y_train, &boost_params)?))
        }
        BaseModel::RandomForest => {
            let forest_params = ForestParams {
                seed: params.seed,
                ..params.forest
            };
            Ok(WebModel::Ensemble(fit_forest(
                x_train,
                y_train,
                &forest_params,
            )?))
        }
        other => Err(Error::domain(format!(
            "`{}` is not a feature-regression family",
            other.family_label()
        ))),
    }
}

fn fit_web(
    x_train: &FeatureMatrix,
    y_train: &[f64],
    x_hold: &FeatureMatrix,
    family: BaseModel,
    params: &CompareParams,
) -> Result<WebOutcome> {
    let model = fit_web_model(x_train, y_train, family, params)?;
    let insample = predict(&model, x_train)?;
    let holdout_pred = predict(&model, x_hold)?;
    Ok(WebOutcome {
        insample,
        holdout_pred,
    })
}

/// Learns stack weights on the overlap of both models' in-sample
/// predictions, then applies them over the holdout window.
fn build_stack(
    method: StackMethod,
    clinical: &ClinicalOutcome,
    web: &WebOutcome,
    train: &DatedSeries,
    svr: &SvrParams,
) -> Result<(StackWeights, DatedSeries)> {
    let first = clinical
        .insample
        .start_date()
        .max(web.insample.start_date());
    let last = clinical.insample.end_date().min(web.insample.end_date());
    let clinical_fit = clinical.insample.window(first, last)?;
    let web_fit = web.insample.window(first, last)?;
    let target = train.window(first, last)?;
    let weights = match method {
        StackMethod::Ols => stack_ols(&target, &clinical_fit, &web_fit)?,
        StackMethod::Svr => stack_svr(&target, &clinical_fit, &web_fit, svr)?,
    };
    let pred = stack_predict(&weights, &clinical.holdout_pred, &web.holdout_pred)?;
    Ok((weights, pred))
}
