//! ARMA coefficient estimation.
//!
//! Starting values come from the two-stage Hannan–Rissanen procedure (a
//! long autoregression proxies the innovations, then least squares on
//! lagged values and lagged innovation proxies). The exact Gaussian
//! likelihood — evaluated by the Kalman filter in an unconstrained
//! reparameterization of the stationary/invertible region — is then
//! maximized by Nelder–Mead with a quasi-Newton polish.

use nalgebra::{DMatrix, DVector};

use crate::arima::state_space::StateSpace;
use crate::arima::{kalman, optim, transform};
use crate::error::Error;
use crate::{diagnostics, linalg, Result};

/// Documented convergence criterion: relative log-likelihood change below
/// this tolerance.
pub(crate) const FTOL_REL: f64 = 1e-8;
/// Documented iteration cap for the simplex stage.
pub(crate) const MAX_ITERATIONS: usize = 500;
const MAX_POLISH_ITERATIONS: usize = 100;
const POLISH_GTOL: f64 = 1e-5;
/// Starting values are pulled strictly inside the stationary region.
const START_CLAMP: f64 = 0.97;
/// A root of the AR or MA polynomial within this distance of the unit
/// circle marks the fit as a boundary solution.
pub(crate) const BOUNDARY_TOL: f64 = 1e-4;
/// Variance-to-level ratio below which the series is treated as constant.
const DEGENERATE_RATIO: f64 = 1e-20;

/// Maximum-likelihood estimate of an ARMA(p,q) model with freely estimated
/// process mean, on an already-differenced series.
#[derive(Debug)]
pub(crate) struct ArmaEstimate {
    pub mean: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub log_likelihood: f64,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub boundary: bool,
}

/// Optimizer vector layout: `[mean, unconstrained AR.., unconstrained MA..]`.
fn unpack(x: &[f64], p: usize, q: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let mean = x[0];
    let ar = transform::ar_from_unconstrained(&x[1..1 + p]);
    let ma = transform::ma_from_unconstrained(&x[1 + p..1 + p + q]);
    (mean, ar, ma)
}

fn negative_log_likelihood(y: &[f64], p: usize, q: usize, x: &[f64]) -> f64 {
    if x.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let (mean, ar, ma) = unpack(x, p, q);
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let ss = StateSpace::from_arma(&ar, &ma);
    match kalman::filter(&centered, &ss) {
        Some(run) => -run.log_likelihood,
        None => f64::INFINITY,
    }
}

/// Hannan–Rissanen starting values `(mean, ar, ma)` in coefficient space.
/// Falls back to the neutral point `(sample mean, 0…)` whenever a stage is
/// ill-posed; starting values only need to be reasonable, not perfect.
fn hannan_rissanen(y: &[f64], p: usize, q: usize, mean0: f64, sd0: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let n = y.len();
    let neutral = (mean0, vec![0.0; p], vec![0.0; q]);
    let centered: Vec<f64> = y.iter().map(|v| v - mean0).collect();

    if q == 0 {
        // Pure AR: Yule–Walker on the sample autocovariances.
        let Ok(cov) = diagnostics::autocovariances(&centered, p) else {
            return neutral;
        };
        let Ok((coeffs, _)) = diagnostics::levinson(&cov) else {
            return neutral;
        };
        if coeffs.iter().all(|c| c.is_finite()) {
            return (mean0, coeffs, Vec::new());
        }
        return neutral;
    }

    // Stage 1: long autoregression approximating the innovations.
    let long_order = ((n as f64).ln().powi(2).floor() as usize)
        .max(2 * (p + q))
        .min(n / 4)
        .max(1);
    let Ok(cov) = diagnostics::autocovariances(&centered, long_order) else {
        return neutral;
    };
    let Ok((long_ar, _)) = diagnostics::levinson(&cov) else {
        return neutral;
    };
    let mut proxies = vec![0.0; n];
    for t in long_order..n {
        let mut predicted = 0.0;
        for (j, a) in long_ar.iter().enumerate() {
            predicted += a * centered[t - j - 1];
        }
        proxies[t] = centered[t] - predicted;
    }

    // Stage 2: least squares of y_t on lagged values and lagged proxies.
    let first_row = p.max(long_order + q);
    if n <= first_row || n - first_row < p + q + 2 {
        return neutral;
    }
    let rows = n - first_row;
    let cols = 1 + p + q;
    let mut design = DMatrix::zeros(rows, cols);
    let mut target = DVector::zeros(rows);
    for (r, t) in (first_row..n).enumerate() {
        design[(r, 0)] = 1.0;
        for i in 0..p {
            design[(r, 1 + i)] = y[t - i - 1];
        }
        for k in 0..q {
            design[(r, 1 + p + k)] = proxies[t - k - 1];
        }
        target[r] = y[t];
    }
    let mut names = vec!["const".to_string()];
    names.extend((1..=p).map(|i| format!("ar{i}")));
    names.extend((1..=q).map(|k| format!("ma{k}")));

    let Ok(solution) = linalg::lstsq(&design, &target, &names) else {
        return neutral;
    };
    let intercept = solution.coefficients[0];
    let ar: Vec<f64> = solution.coefficients[1..1 + p].to_vec();
    let ma: Vec<f64> = solution.coefficients[1 + p..1 + p + q].to_vec();
    if ar.iter().chain(&ma).any(|v| !v.is_finite()) || !intercept.is_finite() {
        return neutral;
    }
    let denom = 1.0 - ar.iter().sum::<f64>();
    let mean = intercept / denom;
    let mean = if mean.is_finite() && (mean - mean0).abs() <= 100.0 * sd0 {
        mean
    } else {
        mean0
    };
    (mean, ar, ma)
}

fn initial_point(y: &[f64], p: usize, q: usize, mean0: f64, sd0: f64) -> Vec<f64> {
    let (mean, ar, ma) = hannan_rissanen(y, p, q, mean0, sd0);
    let mut x = Vec::with_capacity(1 + p + q);
    x.push(mean);
    x.extend(transform::ar_to_unconstrained(&ar, START_CLAMP));
    x.extend(transform::ma_to_unconstrained(&ma, START_CLAMP));
    x
}

/// Fits an ARMA(p,q) with estimated mean to `y` by exact Gaussian maximum
/// likelihood. Callers validate lengths and orders.
pub(crate) fn estimate_arma(y: &[f64], p: usize, q: usize) -> Result<ArmaEstimate> {
    let n = y.len();
    let mean0 = y.iter().sum::<f64>() / n as f64;
    let var0 = y.iter().map(|v| (v - mean0).powi(2)).sum::<f64>() / n as f64;
    if var0 / (mean0 * mean0 + 1.0) < DEGENERATE_RATIO {
        return Err(Error::domain(
            "series variance is negligible relative to its level; ARMA estimation is undefined",
        ));
    }
    let sd0 = var0.sqrt();

    let x0 = initial_point(y, p, q, mean0, sd0);
    let objective = |x: &[f64]| negative_log_likelihood(y, p, q, x);

    let simplex = optim::nelder_mead(&objective, &x0, MAX_ITERATIONS, FTOL_REL);
    let polish = optim::bfgs_polish(&objective, &simplex.x, MAX_POLISH_ITERATIONS, POLISH_GTOL);
    let iterations = simplex.iterations + polish.iterations;

    let polished_better = polish.fx.is_finite() && polish.fx <= simplex.fx;
    let (best_x, best_f) = if polished_better {
        (polish.x, polish.fx)
    } else {
        (simplex.x, simplex.fx)
    };
    let converged = simplex.converged || (polished_better && polish.converged);

    if !best_f.is_finite() {
        return Err(Error::NonConvergence {
            message: format!(
                "likelihood was non-finite at every ARMA({p},{q}) iterate; \
                 the series may be numerically degenerate"
            ),
            last_iterate: best_x,
        });
    }
    if !converged {
        return Err(Error::NonConvergence {
            message: format!(
                "ARMA({p},{q}) estimation used {iterations} iterations without \
                 meeting the relative log-likelihood tolerance {FTOL_REL:e}"
            ),
            last_iterate: best_x,
        });
    }

    let (mean, ar, ma) = unpack(&best_x, p, q);
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let ss = StateSpace::from_arma(&ar, &ma);
    let run = kalman::filter(&centered, &ss).ok_or_else(|| Error::NonConvergence {
        message: format!("filter evaluation failed at the ARMA({p},{q}) optimum"),
        last_iterate: best_x.clone(),
    })?;

    let max_inverse_root =
        transform::ar_max_root_modulus(&ar).max(transform::ma_max_root_modulus(&ma));
    Ok(ArmaEstimate {
        mean,
        ar,
        ma,
        sigma2: run.sigma2,
        log_likelihood: run.log_likelihood,
        residuals: run.residuals,
        iterations,
        converged,
        boundary: max_inverse_root > 1.0 - BOUNDARY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_arma, simulate_white_noise, ArmaProcess};
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 1, 2).expect("valid date")
    }

    #[test]
    fn recovers_ar1_parameters() {
        let process = ArmaProcess {
            ar: vec![0.6],
            ma: vec![],
            mean: 2.0,
            sigma: 1.0,
        };
        let sim = simulate_arma(&process, 2_000, 1, date(), "y").unwrap();
        let fit = estimate_arma(sim.values(), 1, 0).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.ar[0], 0.6, epsilon = 0.08);
        assert_abs_diff_eq!(fit.mean, 2.0, epsilon = 0.15);
        assert_abs_diff_eq!(fit.sigma2, 1.0, epsilon = 0.1);
        assert!(!fit.boundary);
        assert_eq!(fit.residuals.len(), 2_000);
    }

    #[test]
    fn recovers_arma11_parameters() {
        let process = ArmaProcess {
            ar: vec![0.5],
            ma: vec![0.4],
            mean: 0.0,
            sigma: 1.0,
        };
        let sim = simulate_arma(&process, 3_000, 9, date(), "y").unwrap();
        let fit = estimate_arma(sim.values(), 1, 1).unwrap();
        assert_abs_diff_eq!(fit.ar[0], 0.5, epsilon = 0.08);
        assert_abs_diff_eq!(fit.ma[0], 0.4, epsilon = 0.08);
    }

    #[test]
    fn ma1_on_white_noise_matches_iid_likelihood() {
        let sim = simulate_white_noise(1_000, 0.5, 1.0, 4, date(), "wn").unwrap();
        let fit = estimate_arma(sim.values(), 0, 1).unwrap();
        assert_abs_diff_eq!(fit.ma[0], 0.0, epsilon = 0.05);

        // i.i.d. Gaussian log-likelihood at the maximum-likelihood mean and
        // variance: −(n/2)·(ln 2π + ln σ̂² + 1).
        let n = sim.len() as f64;
        let mean = sim.values().iter().sum::<f64>() / n;
        let var = sim.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let iid = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + var.ln() + 1.0);
        assert!(
            (fit.log_likelihood - iid).abs() < 0.5,
            "filtered {} vs iid {}",
            fit.log_likelihood,
            iid
        );
    }

    #[test]
    fn near_constant_series_is_a_domain_error() {
        let values: Vec<f64> = (0..60).map(|i| 5.0 + 1e-12 * (i as f64).sin()).collect();
        let err = estimate_arma(&values, 1, 0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "got {err:?}");
    }

    #[test]
    fn starting_point_is_always_feasible() {
        let process = ArmaProcess {
            ar: vec![0.7, -0.2],
            ma: vec![0.3],
            mean: 10.0,
            sigma: 2.0,
        };
        let sim = simulate_arma(&process, 400, 5, date(), "y").unwrap();
        let x0 = initial_point(sim.values(), 2, 1, 10.0, 2.0);
        assert_eq!(x0.len(), 4);
        let f0 = negative_log_likelihood(sim.values(), 2, 1, &x0);
        assert!(f0.is_finite());
    }

    #[test]
    fn estimated_likelihood_not_worse_than_truth() {
        // The MLE cannot have lower likelihood than the data-generating
        // parameters (up to optimizer tolerance).
        let process = ArmaProcess {
            ar: vec![0.5, -0.3],
            ma: vec![0.4],
            mean: 0.0,
            sigma: 1.0,
        };
        let sim = simulate_arma(&process, 800, 13, date(), "y").unwrap();
        let fit = estimate_arma(sim.values(), 2, 1).unwrap();

        let truth = [
            0.0,
            transform::ar_to_unconstrained(&[0.5, -0.3], 0.999)[0],
            transform::ar_to_unconstrained(&[0.5, -0.3], 0.999)[1],
            transform::ma_to_unconstrained(&[0.4], 0.999)[0],
        ];
        let f_truth = negative_log_likelihood(sim.values(), 2, 1, &truth);
        assert!(fit.log_likelihood >= -f_truth - 1e-3);
    }
}
