//! Harvey state-space form of an ARMA(p,q) process.
//!
//! State dimension `m = max(p, q+1)`; transition matrix `T` carries the AR
//! coefficients in its first column with an identity shifted above the
//! diagonal; the innovation loading is `R = (1, θ_1, …, θ_q, 0, …)ᵀ`; the
//! observation picks the first state component. The stationary state
//! covariance solves the discrete Lyapunov equation `P = T·P·Tᵀ + RRᵀ`,
//! obtained by Kronecker vectorization with a diffuse fallback when the
//! vectorized system is ill-conditioned.

use nalgebra::{DMatrix, DVector};

use crate::linalg;

/// Diffuse prior variance used when the Lyapunov solve is refused.
const DIFFUSE_KAPPA: f64 = 1e6;

pub(crate) struct StateSpace {
    /// Transition matrix, m×m.
    pub transition: DMatrix<f64>,
    /// Innovation loading, m×1.
    pub loading: DVector<f64>,
    /// State dimension.
    pub dim: usize,
}

impl StateSpace {
    /// Build the state-space form from AR and MA coefficient vectors.
    pub fn from_arma(ar: &[f64], ma: &[f64]) -> StateSpace {
        let m = ar.len().max(ma.len() + 1);
        let transition = DMatrix::from_fn(m, m, |i, j| {
            if j == 0 {
                *ar.get(i).unwrap_or(&0.0)
            } else if j == i + 1 {
                1.0
            } else {
                0.0
            }
        });
        let loading = DVector::from_fn(m, |i, _| {
            if i == 0 {
                1.0
            } else {
                *ma.get(i - 1).unwrap_or(&0.0)
            }
        });
        StateSpace {
            transition,
            loading,
            dim: m,
        }
    }

    /// Stationary state covariance (unit innovation variance): the solution
    /// of `P = T·P·Tᵀ + RRᵀ` via `(I − T⊗T)·vec(P) = vec(RRᵀ)`. Falls back to
    /// a diffuse `κ·I` prior when the solve is ill-conditioned — the filter
    /// then burns in from an uninformative state instead of failing.
    pub fn stationary_covariance(&self) -> DMatrix<f64> {
        let m = self.dim;
        let tt = self.transition.kronecker(&self.transition);
        let lhs = DMatrix::<f64>::identity(m * m, m * m) - tt;
        let rr = &self.loading * self.loading.transpose();
        let rhs = DVector::from_fn(m * m, |k, _| rr[(k % m, k / m)]);

        if let Some(vec_p) = linalg::solve_lu(&lhs, &rhs) {
            let p = DMatrix::from_fn(m, m, |i, j| vec_p[j * m + i]);
            // Symmetrize against roundoff; reject non-finite or negative
            // diagonals (a sign the system was near-singular after all).
            let p = (&p + p.transpose()) * 0.5;
            if p.iter().all(|v| v.is_finite()) && (0..m).all(|i| p[(i, i)] >= 0.0) {
                return p;
            }
        }
        DMatrix::<f64>::identity(m, m) * DIFFUSE_KAPPA
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ar1_layout_and_variance() {
        let ss = StateSpace::from_arma(&[0.5], &[]);
        assert_eq!(ss.dim, 1);
        assert_abs_diff_eq!(ss.transition[(0, 0)], 0.5);
        // Stationary variance of AR(1): 1/(1−φ²) = 4/3.
        let p = ss.stationary_covariance();
        assert_abs_diff_eq!(p[(0, 0)], 1.0 / (1.0 - 0.25), epsilon = 1e-12);
    }

    #[test]
    fn arma11_dimensions() {
        let ss = StateSpace::from_arma(&[0.5], &[0.3]);
        assert_eq!(ss.dim, 2);
        assert_abs_diff_eq!(ss.loading[0], 1.0);
        assert_abs_diff_eq!(ss.loading[1], 0.3);
        assert_abs_diff_eq!(ss.transition[(0, 1)], 1.0);
        assert_abs_diff_eq!(ss.transition[(1, 0)], 0.0);
    }

    #[test]
    fn ma1_state_variance_matches_theory() {
        // MA(1) process variance: 1 + θ².
        let ss = StateSpace::from_arma(&[], &[0.4]);
        let p = ss.stationary_covariance();
        assert_abs_diff_eq!(p[(0, 0)], 1.16, epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_satisfies_fixed_point() {
        let ss = StateSpace::from_arma(&[0.5, -0.3], &[0.4]);
        let p = ss.stationary_covariance();
        let rr = &ss.loading * ss.loading.transpose();
        let rebuilt = &ss.transition * &p * ss.transition.transpose() + rr;
        for i in 0..ss.dim {
            for j in 0..ss.dim {
                assert_abs_diff_eq!(p[(i, j)], rebuilt[(i, j)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn unit_root_falls_back_to_diffuse() {
        // φ = 1 puts a unit eigenvalue in T ⊗ T: no stationary solution.
        let ss = StateSpace::from_arma(&[1.0], &[]);
        let p = ss.stationary_covariance();
        assert_abs_diff_eq!(p[(0, 0)], DIFFUSE_KAPPA, epsilon = 1e-6);
    }
}
