//! Dense least squares with rank diagnostics.
//!
//! A thin layer over nalgebra: column-pivoted Householder QR for
//! least-squares fits (with coefficient standard errors and rank-deficiency
//! reporting by column name) and a guarded LU solve for small square systems.
//! Every numeric routine in the crate that needs a linear solve funnels
//! through here so the rank tolerance and conditioning policy live in one
//! place.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::Result;

/// Largest acceptable pivot-ratio for [`solve_lu`]; beyond this the system is
/// treated as numerically singular.
const LU_COND_MAX: f64 = 1e12;

/// Result of a least-squares solve.
#[derive(Debug)]
pub(crate) struct Lstsq {
    /// Coefficients in original column order.
    pub coefficients: Vec<f64>,
    /// Coefficient standard errors (empty when residual dof = 0).
    pub stderr: Vec<f64>,
}

/// Solve `min ‖y − X·b‖₂` by column-pivoted Householder QR.
///
/// `names` labels the columns of `X`; a rank-deficient design is rejected
/// with the names of the columns caught in the dependency (the ones whose
/// pivots collapse).
pub(crate) fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<Lstsq> {
    let (nrows, ncols) = x.shape();
    assert_eq!(nrows, y.len(), "design and target row counts differ");
    assert_eq!(ncols, names.len(), "column names must cover the design");
    if ncols == 0 {
        return Err(Error::domain("least squares requires at least one column"));
    }
    if nrows < ncols {
        return Err(Error::domain(format!(
            "least squares needs at least as many rows ({nrows}) as columns ({ncols})"
        )));
    }

    let qr = x.clone().col_piv_qr();
    let r = qr.r();

    // Rank detection on the pivoted diagonal of R. The pivots decrease in
    // magnitude, so the first collapsed pivot marks the dependent tail.
    let rmax = (0..ncols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let tol = nrows.max(ncols) as f64 * f64::EPSILON * rmax;
    let rank = (0..ncols).take_while(|&i| r[(i, i)].abs() > tol).count();

    // slot_of[c] = position of original column c in the pivoted order.
    let mut slot_of = DMatrix::<usize>::from_fn(ncols, 1, |i, _| i);
    qr.p().inv_permute_rows(&mut slot_of);

    if rank < ncols {
        let mut columns: Vec<String> = (0..ncols)
            .filter(|&c| slot_of[(c, 0)] >= rank)
            .map(|c| names[c].clone())
            .collect();
        columns.sort();
        return Err(Error::RankDeficient { columns });
    }

    // Thin solve: R·z = Qᵀy in pivoted coordinates, then un-pivot.
    let z = qr.q().transpose() * y;
    let mut coef = r
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::estimation("upper-triangular solve failed despite full rank"))?;
    qr.p().inv_permute_rows(&mut coef);

    let fitted_v = x * &coef;
    let residual_v = y - &fitted_v;
    let rss = residual_v.dot(&residual_v);

    // stderr via (XᵀX)⁻¹ = P·R⁻¹R⁻ᵀ·Pᵀ; diag entry for original column c is
    // the squared norm of row slot(c) of R⁻¹.
    let dof = nrows - ncols;
    let stderr = if dof > 0 {
        let sigma2 = rss / dof as f64;
        let rinv = r
            .solve_upper_triangular(&DMatrix::identity(ncols, ncols))
            .ok_or_else(|| Error::estimation("triangular inversion failed despite full rank"))?;
        (0..ncols)
            .map(|c| {
                let k = slot_of[(c, 0)];
                (sigma2 * rinv.row(k).norm_squared()).sqrt()
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(Lstsq {
        coefficients: coef.iter().copied().collect(),
        stderr,
    })
}

/// Solve the square system `A·x = b` by LU with partial pivoting, refusing
/// systems whose pivot ratio suggests a condition number beyond
/// [`LU_COND_MAX`].
pub(crate) fn solve_lu(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = a.clone().lu();
    let u = lu.u();
    let n = u.nrows().min(u.ncols());
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for i in 0..n {
        let d = u[(i, i)].abs();
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    if !dmax.is_finite() || dmin <= dmax / LU_COND_MAX {
        return None;
    }
    let x = lu.solve(b)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}
