//! Bounded Levenberg–Marquardt with finite-difference Jacobians.
//!
//! Parameters are handled in scaled coordinates `p = x / scale`, so a unit
//! step means "one typical magnitude" for every parameter. Bounds are enforced
//! by projecting each trial point onto the box.

use nalgebra::{DMatrix, DVector};

use crate::error::FitError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsqOptions {
    pub max_iter: usize,
    /// Converged once ‖Δp‖ < xtol·(‖p‖ + xtol).
    pub xtol: f64,
    /// Converged once the relative cost decrease of an accepted step is below this.
    pub ftol: f64,
    /// Relative finite-difference step in scaled coordinates.
    pub fd_step: f64,
    /// Central rather than forward differences for the Jacobian.
    pub central: bool,
    /// Evaluate the central-difference Jacobian at the optimum for
    /// [`LsqOutcome::jacobian`]; when `false` that field is empty.
    pub final_jacobian: bool,
}

impl Default for LsqOptions {
    fn default() -> Self {
        Self { max_iter: 200, xtol: 1e-9, ftol: 1e-15, fd_step: 1e-6, central: false, final_jacobian: true }
    }
}

#[derive(Debug, Clone)]
pub struct LsqOutcome {
    pub x: Vec<f64>,
    pub residuals: DVector<f64>,
    /// ½‖r‖².
    pub cost: f64,
    pub iterations: usize,
    /// Last scaled step norm (relative to ‖p‖).
    pub step_norm: f64,
    pub converged: bool,
    /// Jacobian in physical units, ∂r/∂x, evaluated at `x` with central
    /// differences (empty unless [`LsqOptions::final_jacobian`]).
    pub jacobian: DMatrix<f64>,
    /// Parameters sitting on a bound at the optimum.
    pub at_bound: Vec<bool>,
}

/// Box constraints and scaling for the solver.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Typical magnitude of each parameter; must be > 0.
    pub scale: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(scale: Vec<f64>) -> Self {
        let n = scale.len();
        Self { lower: vec![f64::NEG_INFINITY; n], upper: vec![f64::INFINITY; n], scale }
    }

    fn clamp(&self, p: &mut DVector<f64>) {
        for i in 0..p.len() {
            let lo = self.lower[i] / self.scale[i];
            let hi = self.upper[i] / self.scale[i];
            p[i] = p[i].clamp(lo, hi);
        }
    }
}

/// Finite-difference Jacobian of `f` at `x` (physical units).
///
/// Steps are `fd_step · scale_i` and flip direction near an upper bound.
pub fn fd_jacobian<F>(f: &mut F, x: &[f64], r0: &DVector<f64>, bounds: &Bounds, fd_step: f64, central: bool) -> Result<DMatrix<f64>, FitError>
where
    F: FnMut(&[f64]) -> Result<DVector<f64>, FitError>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(r0.len(), n);
    let mut xp = x.to_vec();
    for i in 0..n {
        let h = fd_step * bounds.scale[i];
        if central && x[i] - h >= bounds.lower[i] && x[i] + h <= bounds.upper[i] {
            xp[i] = x[i] + h;
            let rp = f(&xp)?;
            xp[i] = x[i] - h;
            let rm = f(&xp)?;
            jac.set_column(i, &((rp - rm) / (2.0 * h)));
        } else {
            let h = if x[i] + h <= bounds.upper[i] { h } else { -h };
            xp[i] = x[i] + h;
            let rp = f(&xp)?;
            jac.set_column(i, &((rp - r0) / h));
        }
        xp[i] = x[i];
    }
    Ok(jac)
}

fn check_finite(r: &DVector<f64>) -> Result<(), FitError> {
    if r.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(FitError::NoConvergence { iterations: 0, step_norm: f64::NAN, reason: "non-finite residual".into() })
    }
}

/// Minimize ½‖f(x)‖² within `bounds`, starting from `x0`.
///
/// Returns an outcome even when the iteration budget runs out; callers decide
/// what `converged == false` means for them.
pub fn levenberg_marquardt<F>(mut f: F, x0: &[f64], bounds: &Bounds, opts: &LsqOptions) -> Result<LsqOutcome, FitError>
where
    F: FnMut(&[f64]) -> Result<DVector<f64>, FitError>,
{
    let n = x0.len();
    assert_eq!(bounds.scale.len(), n);
    let scale = DVector::from_column_slice(&bounds.scale);
    let to_x = |p: &DVector<f64>| -> Vec<f64> { p.component_mul(&scale).iter().copied().collect() };

    let mut p = DVector::from_iterator(n, x0.iter().zip(&bounds.scale).map(|(x, s)| x / s));
    bounds.clamp(&mut p);
    let mut x = to_x(&p);
    let mut r = f(&x)?;
    check_finite(&r)?;
    let mut cost = 0.5 * r.norm_squared();

    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut iterations = 0;
    let mut step_norm = f64::INFINITY;
    let mut converged = cost == 0.0;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        // Jacobian with respect to scaled coordinates.
        let jx = fd_jacobian(&mut f, &x, &r, bounds, opts.fd_step, opts.central)?;
        let mut j = jx;
        for c in 0..n {
            let s = scale[c];
            j.column_mut(c).scale_mut(s);
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(FitError::NoConvergence {
                iterations,
                step_norm,
                reason: "non-finite Jacobian".into(),
            });
        }
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        if g.amax() == 0.0 {
            converged = true;
            step_norm = 0.0;
            break;
        }

        let mut accepted = false;
        for _ in 0..32 {
            let mut a = jtj.clone();
            for d in 0..n {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let delta = -chol.solve(&g);
            let mut p_new = &p + &delta;
            bounds.clamp(&mut p_new);
            let actual = &p_new - &p;
            step_norm = actual.norm() / (p.norm() + opts.xtol);
            if step_norm < opts.xtol {
                converged = true;
                break;
            }
            let x_new = to_x(&p_new);
            let r_new = f(&x_new)?;
            let cost_new = if r_new.iter().all(|v| v.is_finite()) { 0.5 * r_new.norm_squared() } else { f64::INFINITY };
            // predicted reduction of the linear model
            let jd = &j * &actual;
            let predicted = -(g.dot(&actual) + 0.5 * jd.norm_squared());
            let rho = if predicted > 0.0 { (cost - cost_new) / predicted } else { -1.0 };
            if cost_new < cost && rho > 0.0 {
                let rel_drop = (cost - cost_new) / cost.max(f64::MIN_POSITIVE);
                p = p_new;
                x = x_new;
                r = r_new;
                cost = cost_new;
                lambda *= (1.0 / 3.0f64).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                accepted = true;
                if rel_drop < opts.ftol || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= nu;
            nu *= 2.0;
        }
        if !accepted && !converged {
            // λ blew up without finding a descent step: stationary to working precision.
            converged = true;
        }
    }

    let jacobian = if opts.final_jacobian {
        fd_jacobian(&mut f, &x, &r, bounds, opts.fd_step, true)?
    } else {
        DMatrix::zeros(0, 0)
    };
    let at_bound = (0..n)
        .map(|i| {
            let tol = 1e-9 * bounds.scale[i];
            x[i] <= bounds.lower[i] + tol || x[i] >= bounds.upper[i] - tol
        })
        .collect();
    Ok(LsqOutcome { x, residuals: r, cost, iterations, step_norm, converged, jacobian, at_bound })
}

/// Parameter covariance s²(JᵀJ)⁻¹ with s² = ‖r‖²/(m − n).
///
/// Returns `None` when JᵀJ is numerically singular (condition number above
/// 1e14 after column scaling) or there are no degrees of freedom.
pub fn covariance(jacobian: &DMatrix<f64>, residuals: &DVector<f64>) -> Option<DMatrix<f64>> {
    let (m, n) = jacobian.shape();
    if m <= n {
        return None;
    }
    let s2 = residuals.norm_squared() / (m - n) as f64;
    // equilibrate columns before inverting
    let norms: Vec<f64> = (0..n).map(|c| jacobian.column(c).norm()).collect();
    if norms.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return None;
    }
    let mut js = jacobian.clone();
    for (c, nc) in norms.iter().enumerate() {
        js.column_mut(c).unscale_mut(*nc);
    }
    let svd = js.svd(false, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= smax * 1e-7 {
        return None;
    }
    let vt = svd.v_t?;
    let mut inv = DMatrix::zeros(n, n);
    for k in 0..n {
        let w = 1.0 / svd.singular_values[k].powi(2);
        let v = vt.row(k);
        inv += v.transpose() * v * w;
    }
    for a in 0..n {
        for b in 0..n {
            inv[(a, b)] *= s2 / (norms[a] * norms[b]);
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_as_least_squares() {
        let f = |x: &[f64]| Ok(DVector::from_vec(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]));
        let out = levenberg_marquardt(f, &[-1.2, 1.0], &Bounds::unbounded(vec![1.0, 1.0]), &LsqOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8, "{:?}", out.x);
    }

    #[test]
    fn bound_is_respected_and_reported() {
        // minimum at x = 3, box stops at 2
        let f = |x: &[f64]| Ok(DVector::from_vec(vec![x[0] - 3.0]));
        let b = Bounds { lower: vec![0.0], upper: vec![2.0], scale: vec![1.0] };
        let out = levenberg_marquardt(f, &[1.0], &b, &LsqOptions::default()).unwrap();
        assert_eq!(out.x[0], 2.0);
        assert!(out.at_bound[0]);
    }

    #[test]
    fn linear_regression_covariance() {
        // y = a + b t with known residuals; compare with closed-form OLS covariance
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let noise: Vec<f64> = (0..20).map(|k| ((k * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let y: Vec<f64> = t.iter().zip(&noise).map(|(t, e)| 1.5 + 0.3 * t + 0.1 * e).collect();
        let f = |x: &[f64]| Ok(DVector::from_iterator(20, t.iter().zip(&y).map(|(t, y)| x[0] + x[1] * t - y)));
        let out = levenberg_marquardt(f, &[0.0, 0.0], &Bounds::unbounded(vec![1.0, 1.0]), &LsqOptions::default()).unwrap();
        let cov = covariance(&out.jacobian, &out.residuals).unwrap();

        let n = t.len() as f64;
        let st: f64 = t.iter().sum();
        let stt: f64 = t.iter().map(|v| v * v).sum();
        let det = n * stt - st * st;
        let s2 = out.residuals.norm_squared() / (n - 2.0);
        let var_b = s2 * n / det;
        let var_a = s2 * stt / det;
        assert!((cov[(0, 0)] / var_a - 1.0).abs() < 1e-6);
        assert!((cov[(1, 1)] / var_b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn singular_covariance_is_none() {
        let j = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let r = DVector::from_vec(vec![0.1, -0.1, 0.05]);
        assert!(covariance(&j, &r).is_none());
    }
}
