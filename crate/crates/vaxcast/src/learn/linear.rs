//! Linear learners: ordinary least squares and L1-penalized least squares
//! fit by cyclic coordinate descent on internally standardized columns.
//!
//! The penalized objective is
//! `(1/2n)·Σ(y − μ − Σ x̃_j β_j)² + λ·Σ|β_j|`
//! over columns standardized to mean 0 and population variance 1, with an
//! unpenalized intercept. Reported coefficients are mapped back to the
//! original feature scale, so predictions need no standardization step.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::features::FeatureMatrix;
use crate::linalg;
use crate::Result;

use super::LinearModel;

/// Coordinate-descent sweep cap; exceeding it is a reported failure, not a
/// silent truncation.
const MAX_SWEEPS: usize = 100_000;
/// Sweep-to-sweep coefficient tolerance, scaled by the target's spread.
const TOL_SCALE: f64 = 1e-12;

/// Fits ordinary least squares with an intercept.
///
/// Requires `rows ≥ columns + 1` (one extra row for the intercept); a
/// rank-deficient design is rejected with the dependent columns named.
pub fn fit_ols(x: &FeatureMatrix, y: &[f64]) -> Result<LinearModel> {
    check_target(x, y)?;
    let n = x.n_rows();
    let k = x.n_cols();
    if n < k + 1 {
        return Err(Error::domain(format!(
            "least squares with intercept needs at least {} rows for {k} columns; got {n}",
            k + 1
        )));
    }

    let design = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { x.row(i)[j - 1] });
    let target = DVector::from_column_slice(y);
    let mut names = Vec::with_capacity(k + 1);
    names.push("intercept".to_string());
    names.extend(x.column_names().iter().cloned());
    let solved = linalg::lstsq(&design, &target, &names)?;

    Ok(LinearModel {
        intercept: solved.coefficients[0],
        weights: solved.coefficients[1..].to_vec(),
        regularization: 0.0,
        columns: x.column_names().to_vec(),
    })
}

/// Fits the L1-penalized least-squares model at penalty `lambda ≥ 0` by
/// cyclic coordinate descent from a zero start.
///
/// Constant columns cannot be standardized and keep weight exactly zero.
/// Failure to converge within the sweep cap is an estimation error.
pub fn fit_lasso(x: &FeatureMatrix, y: &[f64], lambda: f64) -> Result<LinearModel> {
    check_target(x, y)?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::domain(format!(
            "penalty must be a finite nonnegative number; got {lambda}"
        )));
    }
    let n = x.n_rows();
    if n < 2 {
        return Err(Error::domain(
            "penalized regression needs at least two rows",
        ));
    }
    let k = x.n_cols();
    let stats = Standardized::from_matrix(x, y);
    let nf = n as f64;

    // Active coefficients live on the standardized scale where each usable
    // column satisfies (1/n)·Σx̃² = 1, making the coordinate update a plain
    // soft threshold.
    let mut beta = vec![0.0f64; k];
    let mut residual = stats.centered_y.clone();
    let tol = TOL_SCALE * stats.sd_y.max(1.0);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut max_step = 0.0f64;
        for j in 0..k {
            if stats.sd[j] == 0.0 {
                continue;
            }
            let col = &stats.columns[j];
            let mut dot = 0.0;
            for (z, r) in col.iter().zip(&residual) {
                dot += z * r;
            }
            let rho = dot / nf + beta[j];
            let updated = soft_threshold(rho, lambda);
            let delta = updated - beta[j];
            if delta != 0.0 {
                for (r, z) in residual.iter_mut().zip(col) {
                    *r -= delta * z;
                }
                beta[j] = updated;
            }
            max_step = max_step.max(delta.abs());
        }
        if max_step < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::estimation(format!(
            "coordinate descent did not converge within {MAX_SWEEPS} sweeps at penalty {lambda}"
        )));
    }

    // Map back to the original feature scale.
    let mut weights = vec![0.0f64; k];
    let mut intercept = stats.mean_y;
    for j in 0..k {
        if stats.sd[j] > 0.0 {
            weights[j] = beta[j] / stats.sd[j];
            intercept -= weights[j] * stats.mean[j];
        }
    }
    Ok(LinearModel {
        intercept,
        weights,
        regularization: lambda,
        columns: x.column_names().to_vec(),
    })
}

/// Smallest penalty at which the penalized solution is entirely zero:
/// `max_j |(1/n)·x̃_jᵀ(y − ȳ)|` over standardizable columns.
pub fn lambda_max(x: &FeatureMatrix, y: &[f64]) -> Result<f64> {
    check_target(x, y)?;
    if x.n_rows() < 2 {
        return Err(Error::domain(
            "penalized regression needs at least two rows",
        ));
    }
    let stats = Standardized::from_matrix(x, y);
    let nf = x.n_rows() as f64;
    let mut best: Option<f64> = None;
    for j in 0..x.n_cols() {
        if stats.sd[j] == 0.0 {
            continue;
        }
        let mut dot = 0.0;
        for (z, r) in stats.columns[j].iter().zip(&stats.centered_y) {
            dot += z * r;
        }
        let corr = (dot / nf).abs();
        best = Some(best.map_or(corr, |b: f64| b.max(corr)));
    }
    best.ok_or_else(|| {
        Error::domain("every feature column is constant; no penalty path exists")
    })
}

/// Log-spaced descending penalty grid from `lambda_max` down to
/// `lambda_max · min_ratio`. Descending penalties mean ascending model
/// capacity, so an earliest-index tie-break during cross-validation picks
/// the most regularized of equally good settings.
pub fn lambda_grid(lambda_max: f64, points: usize, min_ratio: f64) -> Vec<f64> {
    assert!(points >= 2, "a penalty grid needs at least two points");
    assert!(
        lambda_max.is_finite() && min_ratio.is_finite(),
        "grid anchors must be finite"
    );
    assert!(
        0.0 < min_ratio && min_ratio < 1.0,
        "min_ratio must lie in (0, 1)"
    );
    if lambda_max <= 0.0 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| lambda_max * min_ratio.powf(i as f64 / (points - 1) as f64))
        .collect()
}

fn check_target(x: &FeatureMatrix, y: &[f64]) -> Result<()> {
    if y.len() != x.n_rows() {
        return Err(Error::domain(format!(
            "target has {} values for {} feature rows",
            y.len(),
            x.n_rows()
        )));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite target value {bad}")));
    }
    Ok(())
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Column-standardized copy of the design plus the centered target.
struct Standardized {
    /// Per column: `(x − mean)/sd`, or the raw column when `sd == 0`.
    columns: Vec<Vec<f64>>,
    mean: Vec<f64>,
    /// Population standard deviation per column (0 marks a constant column).
    sd: Vec<f64>,
    centered_y: Vec<f64>,
    mean_y: f64,
    sd_y: f64,
}

impl Standardized {
    fn from_matrix(x: &FeatureMatrix, y: &[f64]) -> Standardized {
        let n = x.n_rows();
        let nf = n as f64;
        let k = x.n_cols();
        let mut columns = Vec::with_capacity(k);
        let mut mean = Vec::with_capacity(k);
        let mut sd = Vec::with_capacity(k);
        for j in 0..k {
            let col = x.column(j);
            let m = col.iter().sum::<f64>() / nf;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf;
            let s = var.sqrt();
            if s > 0.0 {
                columns.push(col.iter().map(|v| (v - m) / s).collect());
            } else {
                columns.push(col);
            }
            mean.push(m);
            sd.push(s);
        }
        let mean_y = y.iter().sum::<f64>() / nf;
        let var_y = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum::<f64>() / nf;
        Standardized {
            columns,
            mean,
            sd,
            centered_y: y.iter().map(|v| v - mean_y).collect(),
            mean_y,
            sd_y: var_y.sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::{gaussian_matrix, linear_response};
    use super::*;
    use crate::features::FeatureMatrix;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 1, 2).expect("valid date")
    }

    fn matrix(names: &[&str], rows: Vec<Vec<f64>>) -> FeatureMatrix {
        FeatureMatrix::new(start(), names.iter().map(|s| s.to_string()).collect(), rows)
            .expect("valid matrix")
    }

    #[test]
    fn ols_recovers_exact_linear_rule() {
        let x = matrix(
            &["a", "b"],
            vec![
                vec![1.0, 2.0],
                vec![2.0, 1.0],
                vec![3.0, 5.0],
                vec![4.0, 3.0],
                vec![5.0, 8.0],
            ],
        );
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 3.0 * x.row(i)[0] - x.row(i)[1]).collect();
        let model = fit_ols(&x, &y).unwrap();
        assert_abs_diff_eq!(model.intercept, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(model.weights[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(model.weights[1], -1.0, epsilon = 1e-10);
        assert_eq!(model.regularization, 0.0);
    }

    #[test]
    fn ols_requires_an_extra_row_for_the_intercept() {
        let x = matrix(&["a", "b"], vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        let err = fit_ols(&x, &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "got {err:?}");
    }

    #[test]
    fn ols_names_dependent_columns() {
        // b is an exact copy of a, so the design is rank-deficient.
        let x = matrix(
            &["a", "b"],
            vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0], vec![4.0, 4.0]],
        );
        let err = fit_ols(&x, &[1.0, 2.0, 3.0, 4.0]).unwrap_err();
        match err {
            Error::RankDeficient { columns } => {
                assert!(columns.iter().any(|c| c == "b"), "got {columns:?}")
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    /// Hand-derived single-column fixture. With x = [1,2,3,4] and
    /// y = [1,3,2,6]: population sd(x) = √1.25, ȳ = 3, and the standardized
    /// correlation is (1/4)·x̃ᵀ(y−ȳ) = 7/(4·√1.25). At λ = 0.5 the exact
    /// solution is the soft threshold of that correlation.
    #[test]
    fn lasso_matches_closed_form_single_column() {
        let x = matrix(&["a"], vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let y = [1.0, 3.0, 2.0, 6.0];
        let sd = 1.25f64.sqrt();
        let corr = 7.0 / (4.0 * sd);
        let beta_std = corr - 0.5;
        let expected_weight = beta_std / sd;
        let expected_intercept = 3.0 - expected_weight * 2.5;

        let model = fit_lasso(&x, &y, 0.5).unwrap();
        assert_abs_diff_eq!(model.weights[0], expected_weight, epsilon = 1e-12);
        assert_abs_diff_eq!(model.intercept, expected_intercept, epsilon = 1e-12);
        assert_eq!(model.regularization, 0.5);
    }

    #[test]
    fn lasso_at_zero_penalty_matches_ols() {
        let (x, mut rng) = gaussian_matrix(80, 4, 21);
        let y = linear_response(&x, 1.0, &[0.8, -0.5, 0.0, 0.3], 0.2, &mut rng);
        let ols = fit_ols(&x, &y).unwrap();
        let lasso = fit_lasso(&x, &y, 0.0).unwrap();
        assert_abs_diff_eq!(ols.intercept, lasso.intercept, epsilon = 1e-6);
        for (a, b) in ols.weights.iter().zip(&lasso.weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn lasso_at_lambda_max_is_exactly_zero() {
        let (x, mut rng) = gaussian_matrix(60, 3, 5);
        let y = linear_response(&x, 0.5, &[1.0, -2.0, 0.7], 0.3, &mut rng);
        let lmax = lambda_max(&x, &y).unwrap();
        for lambda in [lmax, 2.0 * lmax] {
            let model = fit_lasso(&x, &y, lambda).unwrap();
            assert!(model.weights.iter().all(|w| *w == 0.0), "weights {:?}", model.weights);
            let mean_y = y.iter().sum::<f64>() / y.len() as f64;
            assert_eq!(model.intercept, mean_y);
        }
        // Just below the threshold at least one weight activates.
        let model = fit_lasso(&x, &y, 0.99 * lmax).unwrap();
        assert!(model.weights.iter().any(|w| *w != 0.0));
    }

    /// Optimality conditions of the penalized objective on the standardized
    /// scale: active coordinates have gradient exactly ±λ, inactive ones at
    /// most λ in magnitude.
    #[test]
    fn lasso_solution_satisfies_stationarity() {
        let (x, mut rng) = gaussian_matrix(90, 5, 13);
        let y = linear_response(&x, -0.2, &[1.5, 0.0, -0.8, 0.0, 0.4], 0.5, &mut rng);
        let lmax = lambda_max(&x, &y).unwrap();
        let lambda = 0.3 * lmax;
        let model = fit_lasso(&x, &y, lambda).unwrap();

        let stats = Standardized::from_matrix(&x, &y);
        let n = x.n_rows() as f64;
        // Rebuild standardized-scale coefficients and residuals.
        let beta: Vec<f64> = (0..x.n_cols())
            .map(|j| model.weights[j] * stats.sd[j])
            .collect();
        let residual: Vec<f64> = (0..x.n_rows())
            .map(|i| {
                let mut r = stats.centered_y[i];
                for (col, b) in stats.columns.iter().zip(&beta) {
                    r -= col[i] * b;
                }
                r
            })
            .collect();
        for j in 0..x.n_cols() {
            let mut dot = 0.0;
            for (z, r) in stats.columns[j].iter().zip(&residual) {
                dot += z * r;
            }
            let grad = dot / n;
            if beta[j] != 0.0 {
                assert_abs_diff_eq!(grad, lambda * beta[j].signum(), epsilon = 1e-6);
            } else {
                assert!(grad.abs() <= lambda + 1e-6, "coordinate {j}: {grad} vs {lambda}");
            }
        }
    }

    #[test]
    fn lasso_l1_norm_shrinks_as_penalty_grows() {
        let (x, mut rng) = gaussian_matrix(70, 4, 31);
        let y = linear_response(&x, 0.0, &[2.0, -1.0, 0.5, 0.0], 0.4, &mut rng);
        let lmax = lambda_max(&x, &y).unwrap();
        let grid = lambda_grid(lmax, 12, 1e-3);
        let mut last_norm = f64::INFINITY;
        // Grid descends in penalty, so the L1 norm must weakly grow.
        for lambda in grid.iter().rev() {
            let model = fit_lasso(&x, &y, *lambda).unwrap();
            let norm: f64 = model
                .weights
                .iter()
                .zip(0..x.n_cols())
                .map(|(w, j)| {
                    // Compare on the standardized scale the penalty acts on.
                    let col = x.column(j);
                    let m = col.iter().sum::<f64>() / col.len() as f64;
                    let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
                        / col.len() as f64;
                    (w * var.sqrt()).abs()
                })
                .sum();
            assert!(
                norm <= last_norm + 1e-9,
                "L1 norm rose from {last_norm} to {norm} at penalty {lambda}"
            );
            last_norm = norm;
        }
    }

    #[test]
    fn constant_column_keeps_zero_weight() {
        let x = matrix(
            &["a", "c"],
            vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0], vec![4.0, 5.0]],
        );
        let y = [2.0, 4.0, 6.0, 8.0];
        let model = fit_lasso(&x, &y, 0.01).unwrap();
        assert_eq!(model.weights[1], 0.0);
        assert!(model.weights[0] > 1.5);
    }

    #[test]
    fn grid_spans_four_decades_descending() {
        let grid = lambda_grid(2.0, 50, 1e-4);
        assert_eq!(grid.len(), 50);
        assert_eq!(grid[0], 2.0);
        assert_abs_diff_eq!(grid[49], 2e-4, epsilon = 1e-16);
        assert!(grid.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn all_constant_features_have_no_penalty_path() {
        let x = matrix(&["c"], vec![vec![3.0], vec![3.0], vec![3.0]]);
        assert!(lambda_max(&x, &[1.0, 2.0, 3.0]).is_err());
    }
}
