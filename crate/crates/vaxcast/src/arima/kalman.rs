//! Kalman-filter evaluation of the exact Gaussian ARMA likelihood.
//!
//! The innovation variance is concentrated out of the likelihood: with
//! one-step prediction errors `v_t` and scaled prediction variances `f_t`
//! (per unit innovation variance), the maximizing variance is
//! `σ̂² = (1/n)·Σ v_t²/f_t` and the concentrated log-likelihood is
//! `ℓ = −(n/2)·ln 2π − (n/2)·ln σ̂² − n/2 − (1/2)·Σ ln f_t`.
//!
//! Once the prediction covariance stops changing the filter freezes its gain
//! (steady state), which cuts the per-evaluation cost on long series without
//! affecting determinism.

use nalgebra::{DMatrix, DVector};

use super::state_space::StateSpace;

/// Floor on the scaled prediction variance, guarding the division when an
/// (almost) deterministic state component is observed.
const F_MIN: f64 = 1e-12;

/// Relative tolerance for declaring the prediction covariance converged.
const STEADY_TOL: f64 = 1e-13;

pub(crate) struct KalmanRun {
    /// Concentrated Gaussian log-likelihood.
    pub log_likelihood: f64,
    /// Concentrated innovation-variance estimate σ̂².
    pub sigma2: f64,
    /// One-step-ahead prediction errors, one per observation.
    pub residuals: Vec<f64>,
}

/// Run the filter over `y` (already centered on the process mean).
///
/// Returns `None` if the recursion produces non-finite quantities, which the
/// optimizer treats as an infeasible parameter point.
pub(crate) fn filter(y: &[f64], ss: &StateSpace) -> Option<KalmanRun> {
    let n = y.len();
    let m = ss.dim;
    let t = &ss.transition;
    let rr = &ss.loading * ss.loading.transpose();

    // Predicted state mean/covariance for t = 0.
    let mut a: DVector<f64> = DVector::zeros(m);
    let mut p: DMatrix<f64> = ss.stationary_covariance();

    let mut residuals = Vec::with_capacity(n);
    let mut sum_v2_over_f = 0.0;
    let mut sum_ln_f = 0.0;

    let mut steady = false;
    let mut f = 0.0;
    let mut gain: DVector<f64> = DVector::zeros(m);

    for &obs in y {
        if !steady {
            f = p[(0, 0)].max(F_MIN);
            gain = p.column(0).into_owned();
        }
        let v = obs - a[0];
        residuals.push(v);
        sum_v2_over_f += v * v / f;
        sum_ln_f += f.ln();

        // Measurement update followed by the time update.
        let a_upd = &a + &gain * (v / f);
        a = t * a_upd;
        if !steady {
            let p_upd = &p - &gain * gain.transpose() / f;
            let p_next = t * p_upd * t.transpose() + &rr;
            // Steady-state detection: covariance fixed point reached.
            let scale = 1.0 + p.amax();
            if (&p_next - &p).amax() < STEADY_TOL * scale {
                steady = true;
            }
            p = p_next;
        }
    }

    let nf = n as f64;
    let sigma2 = sum_v2_over_f / nf;
    if sigma2 <= 0.0 || !sigma2.is_finite() || !sum_ln_f.is_finite() {
        return None;
    }
    let log_likelihood =
        -0.5 * nf * (2.0 * std::f64::consts::PI).ln() - 0.5 * nf * sigma2.ln() - 0.5 * nf
            - 0.5 * sum_ln_f;
    log_likelihood.is_finite().then_some(KalmanRun {
        log_likelihood,
        sigma2,
        residuals,
    })
}
