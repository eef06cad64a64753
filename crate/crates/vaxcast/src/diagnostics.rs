//! Series diagnostics: autocorrelations, a unit-root test and rank-based
//! trend segmentation.
//!
//! * [`acf`] / [`pacf`] — sample autocorrelation (biased, divide-by-n
//!   normalization, so the usual ±1.96/√n bands apply) and partial
//!   autocorrelation via the Durbin–Levinson recursion.
//! * [`adf_test`] — augmented Dickey–Fuller regression with a constant and no
//!   trend, compared against response-surface critical values.
//! * [`kendall_tau`] / [`segment_trend`] — tie-corrected Kendall rank
//!   correlation of value against time, and per-segment Rising/Steady/Falling
//!   labels.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg;
use crate::series::DatedSeries;
use crate::Result;

/// Critical-value response surface for the Dickey–Fuller distribution,
/// constant-only case (no trend), from MacKinnon's published 2010
/// response-surface estimates. Row layout: `b0 + b1/T + b2/T² + b3/T³`
/// evaluated at the effective regression sample size `T`.
const DF_SURFACE_1PCT: [f64; 4] = [-3.43035, -6.5393, -16.786, -79.433];
const DF_SURFACE_5PCT: [f64; 4] = [-2.86154, -2.8903, -4.234, -40.040];
const DF_SURFACE_10PCT: [f64; 4] = [-2.56677, -1.5384, -2.809, 0.0];

/// Significance level for the unit-root decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SignificanceLevel {
    #[serde(rename = "1%")]
    OnePercent,
    #[default]
    #[serde(rename = "5%")]
    FivePercent,
    #[serde(rename = "10%")]
    TenPercent,
}

/// Tabulated critical values at the three standard levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub one_percent: f64,
    pub five_percent: f64,
    pub ten_percent: f64,
}

impl CriticalValues {
    pub fn at(&self, level: SignificanceLevel) -> f64 {
        match level {
            SignificanceLevel::OnePercent => self.one_percent,
            SignificanceLevel::FivePercent => self.five_percent,
            SignificanceLevel::TenPercent => self.ten_percent,
        }
    }
}

/// Outcome of the augmented Dickey–Fuller test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    /// t-ratio of the lagged-level coefficient.
    pub statistic: f64,
    /// Number of lagged-difference terms in the regression.
    pub lag_order: usize,
    /// Effective regression sample size.
    pub n_effective: usize,
    pub critical_values: CriticalValues,
    /// Level the decision was taken at.
    pub level: SignificanceLevel,
    /// True iff `statistic < critical_values.at(level)` (left-tailed test).
    pub reject_unit_root: bool,
}

/// Trend direction of a segment under the threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendLabel {
    Rising,
    Steady,
    Falling,
}

impl std::fmt::Display for TrendLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrendLabel::Rising => write!(f, "Rising"),
            TrendLabel::Steady => write!(f, "Steady"),
            TrendLabel::Falling => write!(f, "Falling"),
        }
    }
}

/// One dated segment with its rank correlation and label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSegment {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub tau: f64,
    pub label: TrendLabel,
}

/// Segment-wise trend report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub segments: Vec<TrendSegment>,
    pub steady_threshold: f64,
}

/// Sample autocorrelation function at lags `0..=max_lag`.
///
/// Uses the biased (divide-by-n) autocovariance so `acf[0] = 1` exactly and
/// the ±1.96/√n significance bands apply. A constant series has no
/// autocorrelation structure and is rejected.
pub fn acf(series: &DatedSeries, max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag {
        return Err(Error::domain(format!(
            "series length {} must exceed max_lag {max_lag}",
            series.len()
        )));
    }
    acf_values(series.values(), max_lag)
}

/// [`acf`] on a bare slice.
pub(crate) fn acf_values(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let cov = autocovariances(values, max_lag)?;
    Ok(cov.iter().map(|c| c / cov[0]).collect())
}

/// Biased sample autocovariances at lags `0..=max_lag`.
pub(crate) fn autocovariances(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    assert!(max_lag < n, "lag must be below the series length");
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut cov = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let mut acc = 0.0;
        for t in k..n {
            acc += (values[t] - mean) * (values[t - k] - mean);
        }
        cov.push(acc / n as f64);
    }
    if cov[0] == 0.0 {
        return Err(Error::domain("constant series has zero variance"));
    }
    Ok(cov)
}

/// Partial autocorrelation function at lags `1..=max_lag` (index 0 of the
/// result is lag 1), from the Durbin–Levinson recursion on the biased ACF.
pub fn pacf(series: &DatedSeries, max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 {
        return Err(Error::domain("pacf needs max_lag ≥ 1"));
    }
    if series.len() <= max_lag + 1 {
        return Err(Error::domain(format!(
            "series length {} must exceed max_lag + 1 = {}",
            series.len(),
            max_lag + 1
        )));
    }
    let cov = autocovariances(series.values(), max_lag)?;
    let (_, partials) = levinson(&cov)?;
    Ok(partials)
}

/// Durbin–Levinson recursion on autocovariances `cov[0..=m]`.
///
/// Returns the order-`m` autoregressive coefficients and the partial
/// autocorrelation sequence (lags `1..=m`). Fails if the recursion leaves the
/// positive-definite region (prediction-error variance hits zero).
pub(crate) fn levinson(cov: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = cov.len() - 1;
    let mut phi = vec![0.0; m];
    let mut prev = vec![0.0; m];
    let mut partials = Vec::with_capacity(m);
    let mut err = cov[0];
    for k in 1..=m {
        if err <= 0.0 {
            return Err(Error::estimation(
                "Durbin–Levinson recursion left the positive-definite region",
            ));
        }
        let mut acc = cov[k];
        for j in 1..k {
            acc -= phi[j - 1] * cov[k - j];
        }
        let reflect = acc / err;
        prev[..k - 1].copy_from_slice(&phi[..k - 1]);
        phi[k - 1] = reflect;
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - reflect * prev[k - 1 - j];
        }
        err *= 1.0 - reflect * reflect;
        partials.push(reflect);
    }
    Ok((phi, partials))
}

/// Width of the 95% significance band for ACF/PACF bar plots: `1.96/√n`.
pub fn significance_band(n: usize) -> f64 {
    1.96 / (n as f64).sqrt()
}

/// Dickey–Fuller critical values at effective sample size `t`.
fn df_critical_values(t: usize) -> CriticalValues {
    let eval = |c: &[f64; 4]| {
        let t = t as f64;
        c[0] + c[1] / t + c[2] / (t * t) + c[3] / (t * t * t)
    };
    CriticalValues {
        one_percent: eval(&DF_SURFACE_1PCT),
        five_percent: eval(&DF_SURFACE_5PCT),
        ten_percent: eval(&DF_SURFACE_10PCT),
    }
}

/// Augmented Dickey–Fuller unit-root test with constant, no trend.
///
/// Regresses `Δy_t` on `[1, y_{t−1}, Δy_{t−1}, …, Δy_{t−lag_order}]`; the
/// statistic is the t-ratio of the `y_{t−1}` coefficient, compared left-tailed
/// against the response-surface critical values.
pub fn adf_test(
    series: &DatedSeries,
    lag_order: usize,
    level: SignificanceLevel,
) -> Result<DiagnosticReport> {
    let y = series.values();
    let n = y.len();
    if n <= lag_order + 2 {
        return Err(Error::domain(format!(
            "series length {n} must exceed lag_order + 2 = {}",
            lag_order + 2
        )));
    }
    let ncols = 2 + lag_order;
    let first = 1 + lag_order; // first usable t index for Δy_t
    let rows = n - first;
    if rows <= ncols {
        return Err(Error::domain(
            "too few observations for the Dickey–Fuller regression",
        ));
    }

    let design = DMatrix::from_fn(rows, ncols, |r, c| {
        let t = first + r;
        match c {
            0 => 1.0,
            1 => y[t - 1],
            _ => {
                let j = c - 1; // lagged difference Δy_{t−j}
                y[t - j] - y[t - j - 1]
            }
        }
    });
    let target = DVector::from_fn(rows, |r, _| {
        let t = first + r;
        y[t] - y[t - 1]
    });
    let mut names: Vec<String> = vec!["const".into(), "level_lag1".into()];
    names.extend((1..=lag_order).map(|j| format!("diff_lag{j}")));

    let fit = linalg::lstsq(&design, &target, &names).map_err(|e| match e {
        Error::RankDeficient { columns } => Error::domain(format!(
            "singular Dickey–Fuller regression (dependent columns: {columns:?})"
        )),
        other => other,
    })?;
    let statistic = fit.coefficients[1] / fit.stderr[1];
    let critical_values = df_critical_values(rows);
    Ok(DiagnosticReport {
        statistic,
        lag_order,
        n_effective: rows,
        critical_values,
        level,
        reject_unit_root: statistic < critical_values.at(level),
    })
}

/// Tie-corrected Kendall rank correlation (τ-b) of a series against time.
pub fn kendall_tau(series: &DatedSeries) -> Result<f64> {
    kendall_tau_values(series.values())
}

/// [`kendall_tau`] on a bare slice; the first coordinate is the index order.
///
/// τ-b = (C − D) / √((n0 − n1)(n0 − n2)) with n0 = n(n−1)/2 and n1/n2 the
/// tie corrections for the two coordinates. Time indices are never tied, so
/// n1 = 0 here; value ties still enter through n2.
pub fn kendall_tau_values(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::domain("kendall_tau needs at least two observations"));
    }
    let mut concordant_minus_discordant = 0i64;
    let mut tied_pairs = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            // Time strictly increases from i to j; classify by value order.
            match values[j].partial_cmp(&values[i]).expect("finite values") {
                std::cmp::Ordering::Greater => concordant_minus_discordant += 1,
                std::cmp::Ordering::Less => concordant_minus_discordant -= 1,
                std::cmp::Ordering::Equal => tied_pairs += 1,
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    let denom = (n0 * (n0 - tied_pairs as f64)).sqrt();
    if denom == 0.0 {
        return Err(Error::domain("all values tied; Kendall's τ is undefined"));
    }
    Ok(concordant_minus_discordant as f64 / denom)
}

/// Label a correlation under the Steady-band threshold rule.
pub fn trend_label(tau: f64, steady_threshold: f64) -> TrendLabel {
    if tau > steady_threshold {
        TrendLabel::Rising
    } else if tau < -steady_threshold {
        TrendLabel::Falling
    } else {
        TrendLabel::Steady
    }
}

/// Split the series at `breakpoints` (each the first date of a new segment)
/// and compute Kendall's τ plus a trend label per segment.
pub fn segment_trend(
    series: &DatedSeries,
    breakpoints: &[NaiveDate],
    steady_threshold: f64,
) -> Result<TrendReport> {
    let mut bounds = Vec::with_capacity(breakpoints.len() + 2);
    bounds.push(0);
    for (i, bp) in breakpoints.iter().enumerate() {
        if i > 0 && *bp <= breakpoints[i - 1] {
            return Err(Error::domain("breakpoints must be strictly increasing"));
        }
        let idx = series.index_of(*bp).ok_or_else(|| {
            Error::domain(format!("breakpoint {bp} outside the series date range"))
        })?;
        if idx == 0 {
            return Err(Error::domain(format!(
                "breakpoint {bp} must fall strictly inside the date range"
            )));
        }
        bounds.push(idx);
    }
    bounds.push(series.len());

    let mut segments = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < 2 {
            return Err(Error::domain(format!(
                "segment starting {} has fewer than two observations",
                series.date_at(lo)
            )));
        }
        let tau = kendall_tau_values(&series.values()[lo..hi])?;
        segments.push(TrendSegment {
            start: series.date_at(lo),
            end: series.date_at(hi - 1),
            tau,
            label: trend_label(tau, steady_threshold),
        });
    }
    Ok(TrendReport {
        segments,
        steady_threshold,
    })
}
