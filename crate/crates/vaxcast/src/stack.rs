//! Forecast stacking: combining a clinical-history forecast and a
//! web-signal forecast into one affine rule, fit either by least squares
//! or by an ε-insensitive support-vector objective.
//!
//! The SVR objective over weights θ = (μ, β_c, β_w) is
//! `Σ_t V_ε(y_t − μ − β_c·c_t − β_w·w_t) + (λ/2)·(μ² + β_c² + β_w²)`,
//! with `V_ε(r) = max(|r| − ε, 0)` and the intercept term μ² optionally
//! excluded from the penalty. It is convex but non-smooth, so the solver
//! chains derivative-free stages: normalized subgradient descent with
//! tail-iterate (Polyak-style) averaging to land near the optimum, then up
//! to three rounds of coordinate-wise golden-section refinement and a
//! simplex polish that handles the diagonal kinks coordinate search can
//! stall on. Everything is deterministic; the final weights are the best
//! point encountered.

use serde::{Deserialize, Serialize};

use crate::arima::optim::nelder_mead;
use crate::error::Error;
use crate::linalg;
use crate::series::DatedSeries;
use crate::Result;

use nalgebra::{DMatrix, DVector};

/// Subgradient iterations before refinement begins.
const SUBGRADIENT_ITERATIONS: usize = 3000;
/// Rounds of (coordinate refinement, simplex polish).
const REFINE_ROUNDS: usize = 3;
/// Stop refining once a full round improves the objective by less than this.
const ROUND_TOL: f64 = 1e-10;
/// Golden-section position tolerance (scaled by coordinate magnitude).
const GOLDEN_XTOL: f64 = 1e-11;

/// How the stack was fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StackMethod {
    Ols,
    Svr,
}

/// Hyperparameters of the ε-insensitive stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrParams {
    /// Half-width of the zero-loss tube (≥ 0).
    pub epsilon: f64,
    /// Ridge penalty strength (> 0).
    pub lambda: f64,
    /// When false, the intercept is left out of the ridge term.
    pub penalize_intercept: bool,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            epsilon: 0.1,
            lambda: 1.0,
            penalize_intercept: true,
        }
    }
}

/// A fitted affine combination of two forecast streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackWeights {
    pub intercept: f64,
    pub clinical_weight: f64,
    pub web_weight: f64,
    pub method: StackMethod,
    /// Present exactly when `method == Svr`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svr_params: Option<SvrParams>,
}

/// The ε-insensitive residual loss: zero inside the tube, linear outside.
pub fn svr_loss(residual: f64, epsilon: f64) -> f64 {
    let excess = residual.abs() - epsilon;
    if excess > 0.0 {
        excess
    } else {
        0.0
    }
}

/// Least-squares stack of two prediction series against the actuals.
///
/// All three series must cover identical dates, at least three of them;
/// collinear predictions are rejected as rank-deficient.
pub fn stack_ols(
    actual: &DatedSeries,
    clinical: &DatedSeries,
    web: &DatedSeries,
) -> Result<StackWeights> {
    check_alignment(actual, clinical, web)?;
    let n = actual.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => clinical.values()[i],
        _ => web.values()[i],
    });
    let target = DVector::from_column_slice(actual.values());
    let names = ["intercept", "clinical", "web"].map(String::from);
    let solved = linalg::lstsq(&design, &target, &names)?;
    Ok(StackWeights {
        intercept: solved.coefficients[0],
        clinical_weight: solved.coefficients[1],
        web_weight: solved.coefficients[2],
        method: StackMethod::Ols,
        svr_params: None,
    })
}

/// SVR stack from the zero start. See [`stack_svr_with_start`].
pub fn stack_svr(
    actual: &DatedSeries,
    clinical: &DatedSeries,
    web: &DatedSeries,
    params: &SvrParams,
) -> Result<StackWeights> {
    stack_svr_with_start(actual, clinical, web, params, [0.0; 3])
}

/// SVR stack solved from an explicit starting point.
///
/// The objective is convex, so the start only affects the path, not the
/// destination: solutions from any reasonable start agree to well within
/// the 1e-8 objective tolerance the solver targets.
pub fn stack_svr_with_start(
    actual: &DatedSeries,
    clinical: &DatedSeries,
    web: &DatedSeries,
    params: &SvrParams,
    start: [f64; 3],
) -> Result<StackWeights> {
    check_alignment(actual, clinical, web)?;
    check_svr_params(params)?;
    if start.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("starting weights must be finite"));
    }

    let y = actual.values();
    let c = clinical.values();
    let w = web.values();
    let objective =
        |theta: &[f64; 3]| objective_inner(theta, y, c, w, params);

    let mut best = start;
    let mut best_f = objective(&best);

    // Stage 1: normalized subgradient descent with tail averaging. The
    // diminishing-step scheme is kink-safe and lands in the optimum's
    // neighborhood even when coordinate moves alone would stall.
    let radius = 2.0 + start.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut theta = start;
    let mut tail_sum = [0.0f64; 3];
    let mut tail_count = 0usize;
    for k in 0..SUBGRADIENT_ITERATIONS {
        let g = subgradient(&theta, y, c, w, params);
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if norm == 0.0 {
            break; // exact stationary point
        }
        let step = radius / ((k + 1) as f64).sqrt();
        for i in 0..3 {
            theta[i] -= step * g[i] / norm;
        }
        let f = objective(&theta);
        if f < best_f {
            best_f = f;
            best = theta;
        }
        if k >= SUBGRADIENT_ITERATIONS / 2 {
            for i in 0..3 {
                tail_sum[i] += theta[i];
            }
            tail_count += 1;
        }
    }
    if tail_count > 0 {
        let avg = tail_sum.map(|s| s / tail_count as f64);
        let f = objective(&avg);
        if f < best_f {
            best_f = f;
            best = avg;
        }
    }

    // Stage 2: alternate coordinate golden-section refinement with a
    // simplex polish; each stage can only keep or improve the best point.
    for _ in 0..REFINE_ROUNDS {
        let round_start = best_f;

        let mut theta = best;
        for _cycle in 0..200 {
            let before = objective(&theta);
            for i in 0..3 {
                refine_coordinate(&objective, &mut theta, i);
            }
            let after = objective(&theta);
            if after < best_f {
                best_f = after;
                best = theta;
            }
            if before - after < ROUND_TOL * (1.0 + after.abs()) {
                break;
            }
        }

        let polished = nelder_mead(
            |x: &[f64]| objective(&[x[0], x[1], x[2]]),
            &best,
            2000,
            1e-13,
        );
        if polished.fx.is_finite() && polished.fx < best_f {
            best_f = polished.fx;
            best = [polished.x[0], polished.x[1], polished.x[2]];
        }

        if round_start - best_f < ROUND_TOL * (1.0 + best_f.abs()) {
            break;
        }
    }

    Ok(StackWeights {
        intercept: best[0],
        clinical_weight: best[1],
        web_weight: best[2],
        method: StackMethod::Svr,
        svr_params: Some(*params),
    })
}

/// Evaluates the SVR objective at arbitrary weights (for oracles and
/// diagnostics). Same alignment rules as the fitters.
pub fn svr_objective(
    theta: [f64; 3],
    actual: &DatedSeries,
    clinical: &DatedSeries,
    web: &DatedSeries,
    params: &SvrParams,
) -> Result<f64> {
    check_alignment(actual, clinical, web)?;
    check_svr_params(params)?;
    Ok(objective_inner(
        &theta,
        actual.values(),
        clinical.values(),
        web.values(),
        params,
    ))
}

/// Applies stack weights to aligned clinical and web predictions:
/// `μ + β_c·clinical + β_w·web`, returned as a series named `stack`.
pub fn stack_predict(
    weights: &StackWeights,
    clinical: &DatedSeries,
    web: &DatedSeries,
) -> Result<DatedSeries> {
    if !clinical.same_dates(web) {
        return Err(Error::domain(format!(
            "clinical predictions cover {}..{} but web predictions cover {}..{}",
            clinical.start_date(),
            clinical.end_date(),
            web.start_date(),
            web.end_date()
        )));
    }
    let values = clinical
        .values()
        .iter()
        .zip(web.values())
        .map(|(c, w)| weights.intercept + weights.clinical_weight * c + weights.web_weight * w)
        .collect();
    DatedSeries::new(clinical.start_date(), "stack", values)
}

fn objective_inner(
    theta: &[f64; 3],
    y: &[f64],
    c: &[f64],
    w: &[f64],
    params: &SvrParams,
) -> f64 {
    let mut loss = 0.0;
    for i in 0..y.len() {
        let r = y[i] - theta[0] - theta[1] * c[i] - theta[2] * w[i];
        loss += svr_loss(r, params.epsilon);
    }
    let mut penalty = theta[1] * theta[1] + theta[2] * theta[2];
    if params.penalize_intercept {
        penalty += theta[0] * theta[0];
    }
    loss + 0.5 * params.lambda * penalty
}

/// One valid subgradient of the objective (zero chosen at the tube edge).
fn subgradient(theta: &[f64; 3], y: &[f64], c: &[f64], w: &[f64], params: &SvrParams) -> [f64; 3] {
    let mut g = [0.0f64; 3];
    for i in 0..y.len() {
        let r = y[i] - theta[0] - theta[1] * c[i] - theta[2] * w[i];
        if r.abs() > params.epsilon {
            let s = r.signum();
            g[0] -= s;
            g[1] -= s * c[i];
            g[2] -= s * w[i];
        }
    }
    g[1] += params.lambda * theta[1];
    g[2] += params.lambda * theta[2];
    if params.penalize_intercept {
        g[0] += params.lambda * theta[0];
    }
    g
}

/// Minimizes the objective along coordinate `i` by golden-section search,
/// widening the bracket whenever the minimizer lands on its edge (the
/// slice of a convex function is unimodal, so this converges).
fn refine_coordinate<F>(objective: &F, theta: &mut [f64; 3], i: usize)
where
    F: Fn(&[f64; 3]) -> f64,
{
    let slice = |x: f64| {
        let mut t = *theta;
        t[i] = x;
        objective(&t)
    };
    let mut window = 1.0 + theta[i].abs();
    for _ in 0..40 {
        let a = theta[i] - window;
        let b = theta[i] + window;
        let x = golden_min(&slice, a, b, GOLDEN_XTOL * (1.0 + theta[i].abs()));
        let near_edge = (x - a).abs() < 0.02 * window || (b - x).abs() < 0.02 * window;
        if !near_edge {
            if slice(x) <= slice(theta[i]) {
                theta[i] = x;
            }
            return;
        }
        window *= 4.0;
    }
}

/// Golden-section minimum of a unimodal function on `[a, b]`.
fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > xtol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn check_alignment(
    actual: &DatedSeries,
    clinical: &DatedSeries,
    web: &DatedSeries,
) -> Result<()> {
    if !actual.same_dates(clinical) || !actual.same_dates(web) {
        return Err(Error::domain(format!(
            "stacking needs identical dates; actuals cover {}..{}, clinical {}..{}, web {}..{}",
            actual.start_date(),
            actual.end_date(),
            clinical.start_date(),
            clinical.end_date(),
            web.start_date(),
            web.end_date()
        )));
    }
    if actual.len() < 3 {
        return Err(Error::domain(format!(
            "stacking needs at least three shared dates; got {}",
            actual.len()
        )));
    }
    Ok(())
}

fn check_svr_params(params: &SvrParams) -> Result<()> {
    if !(params.epsilon >= 0.0 && params.epsilon.is_finite()) {
        return Err(Error::domain(format!(
            "tube half-width must be a finite nonnegative number; got {}",
            params.epsilon
        )));
    }
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(Error::domain(format!(
            "ridge strength must be a finite positive number; got {}",
            params.lambda
        )));
    }
    Ok(())
}
