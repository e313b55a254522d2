//! Damped Gauss-Newton (Levenberg-Marquardt) with forward-difference
//! Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Relative forward-difference step per parameter.
    pub fd_step: f64,
    /// Scaled-gradient threshold that ends the iteration immediately.
    pub gtol: f64,
    /// Scaled-gradient threshold a stalled run must meet to count as
    /// converged.
    pub accept_gtol: f64,
    /// Relative cost decrease below which the iteration has stalled.
    pub ftol: f64,
    /// Relative step size below which the iteration has stalled.
    pub xtol: f64,
    pub initial_damping: f64,
    /// A stalled run whose cost fell below this fraction of the initial
    /// cost counts as an exact fit.
    pub exact_fit_ratio: f64,
    /// A stalled run whose RMS residual is below this also counts as exact.
    pub exact_fit_rms: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            fd_step: 1e-6,
            gtol: 1e-12,
            accept_gtol: 1e-4,
            ftol: 1e-14,
            xtol: 1e-13,
            initial_damping: 1e-3,
            exact_fit_ratio: 1e-20,
            exact_fit_rms: 1e-12,
        }
    }
}

/// Outcome of a minimization.
#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub iterations: usize,
    /// `max_j |J_jᵀ r| / (‖J_j‖ ‖r‖)` at the final point.
    pub gradient_measure: f64,
    pub jacobian: DMatrix<f64>,
    /// Cost after the initial evaluation and after every accepted step.
    pub cost_history: Vec<f64>,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Forward-difference Jacobian; falls back to a backward step where the
/// forward point is outside the model's domain.
fn jacobian<F>(f: &F, p: &[f64], r0: &[f64], typical: &[f64], rel: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut jac = DMatrix::zeros(r0.len(), p.len());
    let mut q = p.to_vec();
    for j in 0..p.len() {
        let h = rel * p[j].abs().max(typical[j]);
        q[j] = p[j] + h;
        let (rh, step) = match f(&q) {
            Ok(r) => (r, h),
            Err(_) => {
                q[j] = p[j] - h;
                (f(&q)?, -h)
            }
        };
        q[j] = p[j];
        for (i, (a, b)) in rh.iter().zip(r0).enumerate() {
            jac[(i, j)] = (a - b) / step;
        }
    }
    Ok(jac)
}

fn gradient_measure(jac: &DMatrix<f64>, r: &[f64]) -> f64 {
    let rnorm = sum_sq(r).sqrt();
    if rnorm == 0.0 {
        return 0.0;
    }
    let rv = DVector::from_column_slice(r);
    jac.column_iter()
        .map(|col| {
            let cn = col.norm();
            if cn == 0.0 {
                0.0
            } else {
                (col.dot(&rv)).abs() / (cn * rnorm)
            }
        })
        .fold(0.0, f64::max)
}

/// Minimizes `Σ r_i(p)²` starting from `initial`.
///
/// `typical` gives a magnitude per parameter used as the floor of the
/// finite-difference step. A residual function that returns an error at a
/// trial point rejects that step; an error at the initial point is returned.
pub fn minimize<F>(f: F, initial: &[f64], typical: &[f64], config: &LmConfig) -> Result<LmReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = initial.len();
    let mut p = initial.to_vec();
    let mut r = f(&p)?;
    if r.len() < n {
        return Err(Error::InvalidDataset(format!(
            "{} residuals cannot constrain {n} parameters",
            r.len()
        )));
    }
    let mut cost = sum_sq(&r);
    let mut history = vec![cost];
    let mut lambda = config.initial_damping;
    let mut jac = jacobian(&f, &p, &r, typical, config.fd_step)?;
    let mut measure = gradient_measure(&jac, &r);

    for iteration in 1..=config.max_iterations {
        if cost == 0.0 || measure <= config.gtol {
            return Ok(report(p, r, cost, iteration - 1, measure, jac, history));
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        let diag_floor = jtj.diagonal().max() * 1e-12;

        let mut accepted = None;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(diag_floor);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            match f(&trial) {
                Ok(rt) => {
                    let ct = sum_sq(&rt);
                    if ct.is_finite() && ct < cost {
                        lambda = (lambda * 0.3).max(1e-12);
                        accepted = Some((trial, rt, ct, step));
                        break;
                    }
                    lambda *= 10.0;
                }
                Err(_) => lambda *= 10.0,
            }
        }

        let Some((trial, rt, ct, step)) = accepted else {
            // no descent direction left: stationary within finite-difference noise,
            // or residuals already at rounding level (exact data)
            if measure <= config.accept_gtol || exact(cost, r.len(), history[0], config) {
                return Ok(report(p, r, cost, iteration, measure, jac, history));
            }
            return Err(Error::NonConvergence {
                iterations: iteration,
            });
        };

        let rel_drop = (cost - ct) / cost;
        let pnorm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let small_step = step.norm() <= config.xtol * (pnorm + config.xtol);
        p = trial;
        r = rt;
        cost = ct;
        history.push(cost);
        jac = jacobian(&f, &p, &r, typical, config.fd_step)?;
        measure = gradient_measure(&jac, &r);

        if rel_drop <= config.ftol || small_step {
            if measure <= config.accept_gtol || exact(cost, r.len(), history[0], config) {
                return Ok(report(p, r, cost, iteration, measure, jac, history));
            }
        }
    }
    if cost == 0.0 || measure <= config.gtol {
        return Ok(report(p, r, cost, config.max_iterations, measure, jac, history));
    }
    Err(Error::NonConvergence {
        iterations: config.max_iterations,
    })
}

fn exact(cost: f64, m: usize, initial_cost: f64, config: &LmConfig) -> bool {
    cost <= config.exact_fit_ratio * initial_cost || cost <= m as f64 * config.exact_fit_rms.powi(2)
}

fn report(
    params: Vec<f64>,
    residuals: Vec<f64>,
    cost: f64,
    iterations: usize,
    gradient_measure: f64,
    jacobian: DMatrix<f64>,
    cost_history: Vec<f64>,
) -> LmReport {
    LmReport {
        params,
        residuals,
        cost,
        iterations,
        gradient_measure,
        jacobian,
        cost_history,
    }
}

/// Condition number of `JᵀJ` after scaling each column of `J` to unit norm.
///
/// Insensitive to parameter units; measures only near-collinearity.
pub fn scaled_condition_number(jac: &DMatrix<f64>) -> f64 {
    let mut scaled = jac.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    condition_number(&scaled)
}

/// Condition number of `JᵀJ` as given.
///
/// Meaningful when every parameter is dimensionless with a natural scale
/// of one, so that a weakly constrained parameter shows up as a short
/// column rather than being normalized away.
pub fn condition_number(jac: &DMatrix<f64>) -> f64 {
    let sv = jac.singular_values();
    let (max, min) = sv
        .iter()
        .fold((0.0_f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    if min == 0.0 {
        f64::INFINITY
    } else {
        (max / min).powi(2)
    }
}

/// Covariance of the parameters: `s² (JᵀJ)⁻¹` with `s² = cost / (m − n)`.
pub fn covariance(report: &LmReport) -> Option<DMatrix<f64>> {
    let (m, n) = report.jacobian.shape();
    let jtj = report.jacobian.transpose() * &report.jacobian;
    let inv = jtj.try_inverse()?;
    let dof = m.saturating_sub(n);
    let s2 = if dof > 0 { report.cost / dof as f64 } else { 0.0 };
    Some(inv * s2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |p: &[f64]| Ok(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]);
        let rep = minimize(f, &[-1.2, 1.0], &[1.0, 1.0], &LmConfig::default()).unwrap();
        assert!((rep.params[0] - 1.0).abs() < 1e-8);
        assert!((rep.params[1] - 1.0).abs() < 1e-8);
        assert!(rep.cost_history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn exponential_decay_with_noise() {
        let xs: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
        let noise: Vec<f64> = (0..40).map(|k| 1e-3 * ((k * 7919 % 13) as f64 - 6.0)).collect();
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| 2.5 * (-1.3 * x).exp() + e).collect();
        let f = |p: &[f64]| Ok(xs.iter().zip(&ys).map(|(x, y)| p[0] * (-p[1] * x).exp() - y).collect());
        let rep = minimize(f, &[1.0, 0.5], &[1.0, 1.0], &LmConfig::default()).unwrap();
        assert!((rep.params[0] - 2.5).abs() < 1e-2);
        assert!((rep.params[1] - 1.3).abs() < 1e-2);
        assert!(rep.gradient_measure < 1e-4);
        let cov = covariance(&rep).unwrap();
        assert!(cov[(0, 0)] > 0.0 && cov[(1, 1)] > 0.0);
    }

    #[test]
    fn rejects_steps_outside_domain() {
        // minimum at p = 0.5 but the model refuses p < 0.2
        let f = |p: &[f64]| {
            if p[0] < 0.2 {
                Err(Error::Degenerate("outside".into()))
            } else {
                Ok(vec![p[0] - 0.5, 0.1 * (p[0] - 0.5)])
            }
        };
        let rep = minimize(f, &[3.0], &[1.0], &LmConfig::default()).unwrap();
        assert!((rep.params[0] - 0.5).abs() < 1e-10);
        assert!(minimize(f, &[0.0], &[1.0], &LmConfig::default()).is_err());
    }

    #[test]
    fn condition_number_flags_degenerate_columns() {
        let jac = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(scaled_condition_number(&jac) > 1e20);
        let jac = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((scaled_condition_number(&jac) - 1.0).abs() < 1e-12);
    }
}
