//! Unconstrained parameterization of stationary AR and invertible MA
//! coefficients.
//!
//! The optimizer works in an unconstrained space: each real is squashed to a
//! partial autocorrelation in (−1, 1) via `x / √(1 + x²)`, and a Levinson-type
//! recursion maps the partial sequence to lag-polynomial coefficients. By the
//! Schur–Cohn criterion the image is exactly the stationary (resp. invertible)
//! region, so no constrained optimizer is needed. The MA recursion flips the
//! update sign to account for the `1 + Σθ_k B^k` polynomial convention.

/// Map an unconstrained real to a partial autocorrelation in (−1, 1).
fn squash(x: f64) -> f64 {
    x / (1.0 + x * x).sqrt()
}

/// Inverse of [`squash`] for |p| < 1.
fn unsquash(p: f64) -> f64 {
    p / (1.0 - p * p).sqrt()
}

/// Levinson-type recursion from partials to coefficients. `sign = -1.0`
/// produces AR coefficients (`1 − Σφ_i B^i` stationary), `sign = +1.0`
/// produces MA coefficients (`1 + Σθ_k B^k` invertible).
fn partials_to_coefficients(partials: &[f64], sign: f64) -> Vec<f64> {
    let m = partials.len();
    let mut coef = vec![0.0; m];
    let mut prev = vec![0.0; m];
    for k in 1..=m {
        let reflect = partials[k - 1];
        prev[..k - 1].copy_from_slice(&coef[..k - 1]);
        coef[k - 1] = reflect;
        for j in 1..k {
            coef[j - 1] = prev[j - 1] + sign * reflect * prev[k - 1 - j];
        }
    }
    coef
}

/// Inverse recursion: coefficients back to partials. Returns `None` when the
/// coefficient set lies outside the stationary/invertible region (some
/// |partial| ≥ 1) or the recursion degenerates.
fn coefficients_to_partials(coef: &[f64], sign: f64) -> Option<Vec<f64>> {
    let m = coef.len();
    let mut work = coef.to_vec();
    let mut partials = vec![0.0; m];
    for k in (1..=m).rev() {
        let reflect = work[k - 1];
        if !(reflect.abs() < 1.0) {
            return None;
        }
        partials[k - 1] = reflect;
        let denom = 1.0 - reflect * reflect;
        let snapshot = work[..k - 1].to_vec();
        for j in 1..k {
            work[j - 1] = (snapshot[j - 1] - sign * reflect * snapshot[k - 1 - j]) / denom;
        }
    }
    Some(partials)
}

/// Unconstrained reals → stationary AR coefficients.
pub(crate) fn ar_from_unconstrained(x: &[f64]) -> Vec<f64> {
    let partials: Vec<f64> = x.iter().map(|&v| squash(v)).collect();
    partials_to_coefficients(&partials, -1.0)
}

/// Unconstrained reals → invertible MA coefficients.
pub(crate) fn ma_from_unconstrained(x: &[f64]) -> Vec<f64> {
    let partials: Vec<f64> = x.iter().map(|&v| squash(v)).collect();
    partials_to_coefficients(&partials, 1.0)
}

/// Stationary AR coefficients → unconstrained reals. Coefficients outside
/// the stationary region are projected in: their partials are clamped to
/// ±`clamp` before inversion.
pub(crate) fn ar_to_unconstrained(coef: &[f64], clamp: f64) -> Vec<f64> {
    to_unconstrained(coef, -1.0, clamp)
}

/// Invertible MA coefficients → unconstrained reals, clamped like
/// [`ar_to_unconstrained`].
pub(crate) fn ma_to_unconstrained(coef: &[f64], clamp: f64) -> Vec<f64> {
    to_unconstrained(coef, 1.0, clamp)
}

fn to_unconstrained(coef: &[f64], sign: f64, clamp: f64) -> Vec<f64> {
    let partials = coefficients_to_partials(coef, sign)
        .unwrap_or_else(|| shrink_into_region(coef, sign, clamp));
    partials
        .iter()
        .map(|&p| unsquash(p.clamp(-clamp, clamp)))
        .collect()
}

/// Project an out-of-region coefficient vector inside by geometric shrinkage
/// `coef_i ← coef_i · s^i` until the inverse recursion succeeds.
fn shrink_into_region(coef: &[f64], sign: f64, clamp: f64) -> Vec<f64> {
    let mut shrink: f64 = 0.95;
    for _ in 0..200 {
        let scaled: Vec<f64> = coef
            .iter()
            .enumerate()
            .map(|(i, &c)| c * shrink.powi(i as i32 + 1))
            .collect();
        if let Some(p) = coefficients_to_partials(&scaled, sign) {
            if p.iter().all(|v| v.abs() < clamp) {
                return p;
            }
        }
        shrink *= 0.95;
    }
    vec![0.0; coef.len()]
}

/// True when the AR polynomial `1 − Σφ_i B^i` has all roots strictly outside
/// the unit circle.
pub(crate) fn ar_is_stationary(coef: &[f64]) -> bool {
    coefficients_to_partials(coef, -1.0).is_some()
}

/// Largest characteristic-root modulus of the AR polynomial (reciprocal
/// roots of `1 − Σφ_i B^i`); < 1 means stationary, near 1 means a boundary
/// solution. Zero-length input returns 0.
pub(crate) fn ar_max_root_modulus(coef: &[f64]) -> f64 {
    max_companion_eigenvalue(coef.iter().copied().collect())
}

/// Largest characteristic-root modulus of the MA polynomial `1 + Σθ_k B^k`.
pub(crate) fn ma_max_root_modulus(coef: &[f64]) -> f64 {
    max_companion_eigenvalue(coef.iter().map(|c| -c).collect())
}

/// Spectral radius of the companion matrix of `z^m − a_1 z^{m−1} − … − a_m`.
fn max_companion_eigenvalue(a: Vec<f64>) -> f64 {
    // Strip trailing zero coefficients: they only add zero roots.
    let mut a = a;
    while a.last() == Some(&0.0) {
        a.pop();
    }
    let m = a.len();
    if m == 0 {
        return 0.0;
    }
    let companion = nalgebra::DMatrix::<f64>::from_fn(m, m, |i, j| {
        if i == 0 {
            a[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ar_roundtrip_inside_region() {
        let coef = vec![0.5, -0.3];
        let x = ar_to_unconstrained(&coef, 0.999);
        let back = ar_from_unconstrained(&x);
        for (a, b) in coef.iter().zip(&back) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn ma_roundtrip_inside_region() {
        let coef = vec![0.4, 0.2, -0.1];
        let x = ma_to_unconstrained(&coef, 0.999);
        let back = ma_from_unconstrained(&x);
        for (a, b) in coef.iter().zip(&back) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn image_is_always_stationary() {
        // Even extreme unconstrained values must land strictly inside.
        for x in [-50.0, -3.0, 0.1, 7.0, 1e3] {
            let coef = ar_from_unconstrained(&[x, -x, x / 2.0]);
            assert!(ar_is_stationary(&coef), "coef {coef:?} not stationary");
            assert!(ar_max_root_modulus(&coef) < 1.0);
        }
    }

    #[test]
    fn explosive_ar_is_detected() {
        assert!(!ar_is_stationary(&[1.2]));
        assert!(ar_is_stationary(&[0.9]));
        assert_abs_diff_eq!(ar_max_root_modulus(&[1.2]), 1.2, epsilon = 1e-10);
    }

    #[test]
    fn ar1_root_is_the_coefficient() {
        // For AR(1) the characteristic root is φ itself.
        assert_abs_diff_eq!(ar_max_root_modulus(&[0.73]), 0.73, epsilon = 1e-12);
        assert_abs_diff_eq!(ma_max_root_modulus(&[0.4]), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn out_of_region_input_is_projected_not_crashed() {
        let x = ar_to_unconstrained(&[1.5], 0.98);
        let coef = ar_from_unconstrained(&x);
        assert!(ar_is_stationary(&coef));
    }

    #[test]
    fn ar2_stationarity_triangle_boundary() {
        // The AR(2) stationary region is the triangle φ2 ∈ (−1, 1),
        // φ2 ± φ1 < 1. Probe points on both sides.
        assert!(ar_is_stationary(&[0.5, 0.3]));
        assert!(!ar_is_stationary(&[0.8, 0.3])); // φ1 + φ2 > 1
        assert!(ar_is_stationary(&[-1.2, -0.3]));
        assert!(!ar_is_stationary(&[0.0, 1.1]));
    }
}
