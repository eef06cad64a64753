//! Derivative-free minimization: Nelder–Mead followed by a quasi-Newton
//! (BFGS) polish with central-difference gradients.
//!
//! The likelihood surface is smooth inside the unconstrained parameterization
//! but expensive; Nelder–Mead gets close from rough starting values and BFGS
//! sharpens the optimum so downstream coefficient comparisons hold to ~1e-6.

/// Outcome of a minimization run.
pub(crate) struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Standard Nelder–Mead simplex minimization.
///
/// Convergence: relative spread of the simplex function values below
/// `ftol_rel`, checked each iteration, with an iteration cap.
pub(crate) fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    max_iter: usize,
    ftol_rel: f64,
) -> OptimResult
where
    F: Fn(&[f64]) -> f64,
{
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let dim = x0.len();
    if dim == 0 {
        let fx = f(x0);
        return OptimResult {
            x: Vec::new(),
            fx,
            iterations: 0,
            converged: true,
        };
    }

    // Initial simplex: x0 plus a per-coordinate perturbation.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-8 { 0.1 * v[i].abs() } else { 0.1 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;

        // Order the simplex: best first.
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let spread = (values[worst] - values[best]).abs();
        if spread <= ftol_rel * (values[best].abs() + 1e-12) {
            converged = true;
            break;
        }

        // Centroid of all points but the worst.
        let mut centroid = vec![0.0; dim];
        for (idx, v) in simplex.iter().enumerate() {
            if idx == worst {
                continue;
            }
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }

        let blend = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = blend(ALPHA);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = blend(GAMMA);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = if fr < values[worst] {
                blend(RHO)
            } else {
                blend(-RHO)
            };
            let fc = f(&contracted);
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best].clone();
                for (idx, v) in simplex.iter_mut().enumerate() {
                    if idx == best {
                        continue;
                    }
                    for (x, a) in v.iter_mut().zip(&anchor) {
                        *x = a + SIGMA * (*x - a);
                    }
                    values[idx] = f(v);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=dim {
        if values[i] < values[best] {
            best = i;
        }
    }
    OptimResult {
        x: simplex[best].clone(),
        fx: values[best],
        iterations,
        converged,
    }
}

/// Central-difference gradient with per-coordinate steps `h·(1 + |x_i|)`.
fn numerical_gradient<F>(f: &F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        probe[i] = x[i] + step;
        let up = f(&probe);
        probe[i] = x[i] - step;
        let down = f(&probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * step);
    }
    g
}

/// BFGS with backtracking (Armijo) line search and numerical gradients.
///
/// Intended as a polish step from a good starting point; returns the best
/// point seen even when the gradient test is not met.
pub(crate) fn bfgs_polish<F>(f: F, x0: &[f64], max_iter: usize, gtol: f64) -> OptimResult
where
    F: Fn(&[f64]) -> f64,
{
    const GRAD_H: f64 = 1e-6;
    const ARMIJO_C1: f64 = 1e-4;

    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if dim == 0 || !fx.is_finite() {
        return OptimResult {
            x,
            fx,
            iterations: 0,
            converged: dim == 0,
        };
    }

    // Inverse-Hessian approximation, dense row-major.
    let mut hinv = vec![0.0; dim * dim];
    for i in 0..dim {
        hinv[i * dim + i] = 1.0;
    }
    let mut g = numerical_gradient(&f, &x, GRAD_H);

    let mut iterations = 0;
    let mut converged = g.iter().all(|v| v.abs() < gtol);
    while iterations < max_iter && !converged {
        iterations += 1;

        // Direction d = −Hinv·g.
        let mut d = vec![0.0; dim];
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..dim {
                acc += hinv[i * dim + j] * g[j];
            }
            d[i] = -acc;
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !slope.is_finite() || slope >= 0.0 {
            // Not a descent direction: reset to steepest descent.
            for i in 0..dim {
                for j in 0..dim {
                    hinv[i * dim + j] = if i == j { 1.0 } else { 0.0 };
                }
                d[i] = -g[i];
            }
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();

        // Backtracking line search.
        let mut step = 1.0;
        let mut x_new = Vec::new();
        let mut f_new = f64::INFINITY;
        let mut accepted = false;
        for _ in 0..40 {
            x_new = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            f_new = f(&x_new);
            if f_new.is_finite() && f_new <= fx + ARMIJO_C1 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }

        let g_new = numerical_gradient(&f, &x_new, GRAD_H);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let yy: f64 = yv.iter().map(|v| v * v).sum::<f64>().sqrt();

        // BFGS update, skipped when curvature information is unreliable.
        if sy > 1e-12 * ss * yy {
            let rho = 1.0 / sy;
            // Hinv ← (I − ρ s yᵀ) Hinv (I − ρ y sᵀ) + ρ s sᵀ
            let mut hy = vec![0.0; dim];
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..dim {
                    acc += hinv[i * dim + j] * yv[j];
                }
                hy[i] = acc;
            }
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                for j in 0..dim {
                    hinv[i * dim + j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }

        let f_change = (fx - f_new).abs();
        x = x_new;
        fx = f_new;
        g = g_new;
        if g.iter().all(|v| v.abs() < gtol) || f_change <= 1e-12 * (fx.abs() + 1e-12) {
            converged = true;
        }
    }

    OptimResult {
        x,
        fx,
        iterations,
        converged,
    }
}
