//! AR(p) and ARIMA(p,d,q) modeling of the daily ratio series.
//!
//! Fits use the exact Gaussian likelihood (Kalman filter on the ARMA
//! state-space form) in an unconstrained reparameterization of the
//! stationary/invertible coefficient region; model selection scores a
//! candidate grid by information criteria; forecasting iterates the fitted
//! recursion with future innovations set to zero.
//!
//! The model for the (optionally once-differenced) series `y_t` is
//! `y_t = μ + Σ_i ar_i·y_{t−i} + e_t + Σ_k ma_k·e_{t−k}`, where `μ` is the
//! intercept and `e_t` the one-step prediction errors.

pub(crate) mod estimate;
pub(crate) mod kalman;
pub(crate) mod optim;
pub(crate) mod state_space;
pub(crate) mod transform;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::series::DatedSeries;
use crate::{exec, Result};

/// Near-ties under the parsimony selection rule: candidates within this AIC
/// distance of the criterion winner are considered equivalent and resolved
/// toward fewer parameters.
const PARSIMONY_AIC_BAND: f64 = 1.0;

/// Model orders: `p` AR lags, `d` differences, `q` MA lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaSpec {
    /// Validated constructor: at least one AR or MA term, `d ∈ {0, 1}`.
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        let spec = ArimaSpec { p, d, q };
        spec.validate()?;
        Ok(spec)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.p + self.q == 0 {
            return Err(Error::domain(
                "model must include at least one AR or MA term (p + q ≥ 1)",
            ));
        }
        if self.d > 1 {
            return Err(Error::domain(format!(
                "differencing order {} unsupported; only d = 0 or d = 1 is available",
                self.d
            )));
        }
        Ok(())
    }

    /// Human-readable family name: `AR(p)` for pure undifferenced AR
    /// models, `ARIMA(p,d,q)` otherwise.
    pub fn label(&self) -> String {
        if self.q == 0 && self.d == 0 {
            format!("AR({})", self.p)
        } else {
            format!("ARIMA({},{},{})", self.p, self.d, self.q)
        }
    }
}

impl std::fmt::Display for ArimaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)
    }
}

/// Optimizer outcome recorded with every fit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Convergence {
    /// Relative log-likelihood change fell below the documented tolerance.
    pub converged: bool,
    /// Total optimizer iterations (simplex stage plus polish stage).
    pub iterations: usize,
    /// An AR or MA root lies within 1e-4 of the unit circle.
    pub boundary: bool,
}

/// A fitted model, including the context needed to forecast from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArimaFit {
    pub spec: ArimaSpec,
    /// Intercept μ of the forecast recursion, `mean·(1 − Σ ar_i)`.
    pub intercept: f64,
    pub ar_weights: Vec<f64>,
    pub ma_weights: Vec<f64>,
    pub innovation_variance: f64,
    /// One-step-ahead prediction errors, one per likelihood observation.
    pub residuals: Vec<f64>,
    pub log_likelihood: f64,
    /// Observations entering the likelihood (series length minus `d`).
    pub n_obs: usize,
    pub convergence: Convergence,
    /// Estimated process mean of the (differenced) series.
    pub mean: f64,
    /// Name of the series the model was fitted to.
    pub series_name: String,
    /// Date of the last fitted observation; forecasts start the next day.
    pub last_date: NaiveDate,
    /// Last `p` values of the modeled (differenced) series, oldest first.
    pub tail_values: Vec<f64>,
    /// Last `q` one-step prediction errors, oldest first.
    pub tail_residuals: Vec<f64>,
    /// Last value on the original scale; present only when `d = 1`.
    pub last_level: Option<f64>,
}

/// Information-criterion scores for one fitted candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelScore {
    pub spec: ArimaSpec,
    pub aic: f64,
    pub bic: f64,
    /// Parameter count: p + q + 2 (intercept and innovation variance).
    pub dof: usize,
}

/// Selection rule for [`select_model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionCriterion {
    Aic,
    Bic,
    /// Smallest BIC; ties and near-ties (AIC within 1) resolved toward the
    /// candidate with fewest parameters.
    #[default]
    Parsimony,
}

impl std::fmt::Display for SelectionCriterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectionCriterion::Aic => write!(f, "aic"),
            SelectionCriterion::Bic => write!(f, "bic"),
            SelectionCriterion::Parsimony => write!(f, "parsimony"),
        }
    }
}

/// Default AR-lag candidates for model selection over the ratio series.
pub const DEFAULT_P_CANDIDATES: [usize; 5] = [1, 3, 5, 6, 7];
/// Default MA-lag candidates for model selection over the ratio series.
pub const DEFAULT_Q_CANDIDATES: [usize; 4] = [8, 15, 21, 28];

/// Fits a pure autoregression of order `p` (intercept included).
///
/// Requires `series.len() > 3p` and a non-constant series; coefficients
/// equal those of [`fit_arima`] with spec `(p, 0, 0)`.
pub fn fit_ar(series: &DatedSeries, p: usize) -> Result<ArimaFit> {
    if p == 0 {
        return Err(Error::domain("autoregressive order must be positive"));
    }
    if series.len() <= 3 * p {
        return Err(Error::domain(format!(
            "series length {} is insufficient for AR({p}); need more than {} observations",
            series.len(),
            3 * p
        )));
    }
    fit_core(series, ArimaSpec { p, d: 0, q: 0 })
}

/// Fits an ARIMA(p,d,q) model by exact Gaussian maximum likelihood.
///
/// Requires `series.len() > 3(p+q) + 10`. Residuals are the filter's
/// one-step-ahead prediction errors on the differenced scale.
pub fn fit_arima(series: &DatedSeries, spec: ArimaSpec) -> Result<ArimaFit> {
    spec.validate()?;
    let needed = 3 * (spec.p + spec.q) + 10;
    if series.len() <= needed {
        return Err(Error::domain(format!(
            "series length {} is insufficient for {spec}; need more than {needed} observations",
            series.len()
        )));
    }
    fit_core(series, spec)
}

fn fit_core(series: &DatedSeries, spec: ArimaSpec) -> Result<ArimaFit> {
    let y = series.values();
    let (modeled, last_level): (Vec<f64>, Option<f64>) = if spec.d == 1 {
        let diffed: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
        (diffed, Some(*y.last().expect("series is non-empty")))
    } else {
        (y.to_vec(), None)
    };
    if modeled.len() <= spec.p.max(spec.q) {
        return Err(Error::domain(format!(
            "too few observations remain after differencing for {spec}"
        )));
    }

    let est = estimate::estimate_arma(&modeled, spec.p, spec.q)?;

    let intercept = est.mean * (1.0 - est.ar.iter().sum::<f64>());
    let tail_values = modeled[modeled.len() - spec.p..].to_vec();
    let tail_residuals = est.residuals[est.residuals.len() - spec.q..].to_vec();
    Ok(ArimaFit {
        spec,
        intercept,
        ar_weights: est.ar,
        ma_weights: est.ma,
        innovation_variance: est.sigma2,
        log_likelihood: est.log_likelihood,
        n_obs: modeled.len(),
        convergence: Convergence {
            converged: est.converged,
            iterations: est.iterations,
            boundary: est.boundary,
        },
        mean: est.mean,
        series_name: series.name().to_string(),
        last_date: series.end_date(),
        tail_values,
        tail_residuals,
        residuals: est.residuals,
        last_level,
    })
}

/// Scores a fit: `aic = −2ℓ + 2·dof`, `bic = −2ℓ + ln(n)·dof`, with
/// `dof = p + q + 2` counting the intercept and innovation variance.
pub fn information_criteria(fit: &ArimaFit) -> ModelScore {
    let dof = fit.spec.p + fit.spec.q + 2;
    let minus_two_ll = -2.0 * fit.log_likelihood;
    ModelScore {
        spec: fit.spec,
        aic: minus_two_ll + 2.0 * dof as f64,
        bic: minus_two_ll + (fit.n_obs as f64).ln() * dof as f64,
        dof,
    }
}

/// Fits every `(p, q)` candidate pair with `d = 0`, scores them, and picks
/// a winner under `criterion`. Returns the winning fit and the score table
/// (in grid order, successful fits only). Candidates that fail to fit are
/// skipped; if all fail the error carries per-candidate diagnostics.
pub fn select_model(
    series: &DatedSeries,
    p_candidates: &[usize],
    q_candidates: &[usize],
    criterion: SelectionCriterion,
) -> Result<(ArimaFit, Vec<ModelScore>)> {
    if p_candidates.is_empty() || q_candidates.is_empty() {
        return Err(Error::domain("candidate sets must be non-empty"));
    }
    let mut grid = Vec::with_capacity(p_candidates.len() * q_candidates.len());
    for &p in p_candidates {
        for &q in q_candidates {
            grid.push(ArimaSpec { p, d: 0, q });
        }
    }

    let outcomes = exec::map_slice(&grid, |spec| fit_arima(series, *spec));

    let mut fits: Vec<ArimaFit> = Vec::new();
    let mut scores: Vec<ModelScore> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for (spec, outcome) in grid.iter().zip(outcomes) {
        match outcome {
            Ok(fit) => {
                scores.push(information_criteria(&fit));
                fits.push(fit);
            }
            Err(err) => failures.push(format!("{spec}: {err}")),
        }
    }
    if fits.is_empty() {
        return Err(Error::Estimation(format!(
            "every candidate failed to fit — {}",
            failures.join("; ")
        )));
    }

    let winner = pick_winner(&scores, criterion);
    Ok((fits[winner].clone(), scores))
}

/// Index of the winning score under the given criterion. Ties break toward
/// fewer parameters, then the earlier grid position.
fn pick_winner(scores: &[ModelScore], criterion: SelectionCriterion) -> usize {
    let by_value = |value: fn(&ModelScore) -> f64| -> usize {
        let mut best = 0;
        for i in 1..scores.len() {
            let (a, b) = (&scores[i], &scores[best]);
            if value(a) < value(b) || (value(a) == value(b) && a.dof < b.dof) {
                best = i;
            }
        }
        best
    };
    match criterion {
        SelectionCriterion::Aic => by_value(|s| s.aic),
        SelectionCriterion::Bic => by_value(|s| s.bic),
        SelectionCriterion::Parsimony => {
            let anchor = by_value(|s| s.bic);
            let anchor_aic = scores[anchor].aic;
            let mut best = anchor;
            for (i, score) in scores.iter().enumerate() {
                if (score.aic - anchor_aic).abs() < PARSIMONY_AIC_BAND
                    && score.dof < scores[best].dof
                {
                    best = i;
                }
            }
            best
        }
    }
}

/// Iterated conditional-expectation forecasts: future innovations are set
/// to zero and the fitted recursion is rolled forward `horizon` days past
/// the end of the fitted series.
pub fn forecast(fit: &ArimaFit, horizon: usize) -> Result<DatedSeries> {
    if horizon == 0 {
        return Err(Error::domain("forecast horizon must be at least 1"));
    }
    let mut values = fit.tail_values.clone();
    let mut errors = fit.tail_residuals.clone();
    let mut path = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut next = fit.intercept;
        for (i, w) in fit.ar_weights.iter().enumerate() {
            next += w * values[values.len() - 1 - i];
        }
        for (k, w) in fit.ma_weights.iter().enumerate() {
            next += w * errors[errors.len() - 1 - k];
        }
        values.push(next);
        errors.push(0.0);
        path.push(next);
    }

    // Undo the differencing: cumulative sums from the last observed level.
    if let Some(level) = fit.last_level {
        let mut running = level;
        for v in path.iter_mut() {
            running += *v;
            *v = running;
        }
    }

    let start = fit
        .last_date
        .succ_opt()
        .ok_or_else(|| Error::domain("forecast dates overflow the calendar"))?;
    DatedSeries::new(start, "forecast", path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_arma, ArmaProcess};
    use approx::assert_abs_diff_eq;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
    }

    fn toy_fit(intercept: f64, ar: Vec<f64>, ma: Vec<f64>, tail: Vec<f64>, errs: Vec<f64>) -> ArimaFit {
        let p = ar.len();
        let q = ma.len();
        let mean = intercept / (1.0 - ar.iter().sum::<f64>());
        ArimaFit {
            spec: ArimaSpec { p, d: 0, q },
            intercept,
            ar_weights: ar,
            ma_weights: ma,
            innovation_variance: 1.0,
            residuals: errs.clone(),
            log_likelihood: 0.0,
            n_obs: tail.len().max(1),
            convergence: Convergence {
                converged: true,
                iterations: 1,
                boundary: false,
            },
            mean,
            series_name: "y".to_string(),
            last_date: date(2021, 7, 20),
            tail_values: tail,
            tail_residuals: errs,
            last_level: None,
        }
    }

    #[test]
    fn spec_validation_and_display() {
        assert!(ArimaSpec::new(0, 0, 0).is_err());
        assert!(ArimaSpec::new(1, 2, 0).is_err());
        let spec = ArimaSpec::new(7, 0, 8).unwrap();
        assert_eq!(spec.to_string(), "ARIMA(7,0,8)");
        assert_eq!(spec.label(), "ARIMA(7,0,8)");
        assert_eq!(ArimaSpec::new(7, 0, 0).unwrap().label(), "AR(7)");
    }

    #[test]
    fn information_criteria_frozen_example() {
        // Hand-derived: ℓ = 0, dof = 17, n = 219 → aic = 34,
        // bic = 17·ln(219) = 91.63673…
        let mut fit = toy_fit(0.0, vec![0.1; 7], vec![0.1; 8], vec![0.0; 7], vec![0.0; 8]);
        fit.n_obs = 219;
        fit.log_likelihood = 0.0;
        let score = information_criteria(&fit);
        assert_eq!(score.dof, 17);
        assert_abs_diff_eq!(score.aic, 34.0, epsilon = 1e-12);
        assert_abs_diff_eq!(score.bic, 17.0 * (219.0f64).ln(), epsilon = 1e-12);
        assert!(score.bic >= score.aic);
    }

    #[test]
    fn forecast_ar1_geometric_decay() {
        // φ = 0.5, μ = 0, last value 2 → 1, 0.5, 0.25, …
        let fit = toy_fit(0.0, vec![0.5], vec![], vec![2.0], vec![]);
        let fc = forecast(&fit, 4).unwrap();
        assert_eq!(fc.start_date(), date(2021, 7, 21));
        let expected = [1.0, 0.5, 0.25, 0.125];
        for (got, want) in fc.values().iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn forecast_converges_to_process_mean() {
        // μ = 0.6, φ = (0.3, 0.2) → stationary mean 0.6/(1−0.5) = 1.2.
        let fit = toy_fit(0.6, vec![0.3, 0.2], vec![0.4], vec![5.0, 4.0], vec![0.7]);
        let fc = forecast(&fit, 200).unwrap();
        assert_abs_diff_eq!(*fc.values().last().unwrap(), 1.2, epsilon = 1e-6);
    }

    #[test]
    fn forecast_horizon_one_matches_direct_recursion() {
        let fit = toy_fit(
            0.3,
            vec![0.4, -0.1, 0.05],
            vec![0.25, -0.15],
            vec![1.0, 2.0, 3.0],
            vec![0.5, -0.2],
        );
        let fc = forecast(&fit, 1).unwrap();
        let direct = 0.3 + 0.4 * 3.0 + (-0.1) * 2.0 + 0.05 * 1.0 + 0.25 * (-0.2) + (-0.15) * 0.5;
        assert_abs_diff_eq!(fc.values()[0], direct, epsilon = 1e-9);
    }

    #[test]
    fn forecast_rejects_zero_horizon() {
        let fit = toy_fit(0.0, vec![0.5], vec![], vec![2.0], vec![]);
        assert!(forecast(&fit, 0).is_err());
    }

    #[test]
    fn differenced_forecast_integrates_from_last_level() {
        // Differenced model forecasts a constant increment μ = 0.5 when the
        // tail is at the process mean; levels then climb linearly.
        let mut fit = toy_fit(0.5, vec![], vec![0.0], vec![], vec![0.0]);
        fit.spec = ArimaSpec { p: 0, d: 1, q: 1 };
        fit.last_level = Some(10.0);
        let fc = forecast(&fit, 3).unwrap();
        let expected = [10.5, 11.0, 11.5];
        for (got, want) in fc.values().iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn fit_ar_and_fit_arima_agree() {
        let process = ArmaProcess {
            ar: vec![0.6, -0.2],
            ma: vec![],
            mean: 1.0,
            sigma: 1.0,
        };
        let sim = simulate_arma(&process, 500, 21, date(2021, 1, 2), "y").unwrap();
        let a = fit_ar(&sim, 2).unwrap();
        let b = fit_arima(&sim, ArimaSpec::new(2, 0, 0).unwrap()).unwrap();
        for (x, y) in a.ar_weights.iter().zip(&b.ar_weights) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(a.intercept, b.intercept, epsilon = 1e-6);
    }

    #[test]
    fn fit_rejects_short_series() {
        let sim = simulate_arma(
            &ArmaProcess {
                ar: vec![0.5],
                ma: vec![],
                mean: 0.0,
                sigma: 1.0,
            },
            12,
            3,
            date(2021, 1, 2),
            "y",
        )
        .unwrap();
        assert!(fit_ar(&sim, 4).is_err());
        assert!(fit_arima(&sim, ArimaSpec::new(1, 0, 1).unwrap()).is_err());
    }

    #[test]
    fn select_model_is_internally_consistent() {
        let process = ArmaProcess {
            ar: vec![0.7],
            ma: vec![],
            mean: 0.0,
            sigma: 1.0,
        };
        let sim = simulate_arma(&process, 300, 17, date(2021, 1, 2), "y").unwrap();
        let (best, scores) =
            select_model(&sim, &[1, 2], &[0, 1], SelectionCriterion::Aic).unwrap();
        let min_aic = scores
            .iter()
            .map(|s| s.aic)
            .fold(f64::INFINITY, f64::min);
        let winner_score = scores
            .iter()
            .find(|s| s.spec == best.spec)
            .expect("winner is scored");
        assert_eq!(winner_score.aic, min_aic);
        assert_eq!(scores.len(), 4);
    }

    #[test]
    fn select_model_singleton_grid_returns_it() {
        let process = ArmaProcess {
            ar: vec![0.5],
            ma: vec![],
            mean: 0.0,
            sigma: 1.0,
        };
        let sim = simulate_arma(&process, 200, 5, date(2021, 1, 2), "y").unwrap();
        let (best, scores) =
            select_model(&sim, &[2], &[0], SelectionCriterion::Parsimony).unwrap();
        assert_eq!(best.spec, ArimaSpec { p: 2, d: 0, q: 0 });
        assert_eq!(scores.len(), 1);
    }

    #[test]
    fn parsimony_prefers_fewer_parameters_among_near_ties() {
        let mk = |p: usize, q: usize, aic: f64, bic: f64| ModelScore {
            spec: ArimaSpec { p, d: 0, q },
            aic,
            bic,
            dof: p + q + 2,
        };
        // BIC winner has AIC 100.0; a smaller model sits within the band.
        let scores = vec![
            mk(3, 2, 100.0, 120.0),
            mk(1, 0, 100.6, 121.0),
            mk(5, 4, 99.8, 125.0),
        ];
        assert_eq!(pick_winner(&scores, SelectionCriterion::Parsimony), 1);
        assert_eq!(pick_winner(&scores, SelectionCriterion::Bic), 0);
        assert_eq!(pick_winner(&scores, SelectionCriterion::Aic), 2);
    }

    #[test]
    fn empty_candidate_sets_rejected() {
        let sim = simulate_arma(
            &ArmaProcess {
                ar: vec![0.5],
                ma: vec![],
                mean: 0.0,
                sigma: 1.0,
            },
            100,
            2,
            date(2021, 1, 2),
            "y",
        )
        .unwrap();
        assert!(select_model(&sim, &[], &[0], SelectionCriterion::Aic).is_err());
    }
}
