//! Damped least squares (Levenberg–Marquardt) with a central-difference
//! Jacobian.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when the relative decrease of χ² falls below this.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Asymptotic standard errors, `sqrt(diag((JᵀJ)⁻¹)·χ²/(N − p))`.
    pub std_errors: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub residual_rms: f64,
    pub chi2: f64,
    pub iterations: usize,
}

/// Minimizes `Σ r_i(p)²`. `residuals(p, r)` fills `r` (length `n_points`).
/// `scales` gives the typical magnitude of each parameter and sets the
/// finite-difference step.
pub fn levenberg_marquardt<F>(
    residuals: F,
    initial: &[f64],
    scales: &[f64],
    n_points: usize,
    options: FitOptions,
) -> Result<FitResult>
where
    F: Fn(&[f64], &mut [f64]),
{
    let p = initial.len();
    assert_eq!(scales.len(), p);
    if n_points <= p {
        return Err(Error::InsufficientData(format!(
            "{n_points} points cannot constrain {p} parameters"
        )));
    }
    let mut params = initial.to_vec();
    let mut r = vec![0.0; n_points];
    residuals(&params, &mut r);
    let mut chi2 = sum_sq(&r);
    if !chi2.is_finite() {
        return Err(Error::Numerical("non-finite residuals at the starting point".into()));
    }
    let mut lambda = 1e-3;
    let mut jac = DMatrix::zeros(n_points, p);
    let mut trial = vec![0.0; n_points];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        iterations += 1;
        jacobian(&residuals, &params, scales, &mut jac);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        if grad.amax() == 0.0 || chi2 == 0.0 {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for j in 0..p {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let candidate: Vec<f64> = params.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            residuals(&candidate, &mut trial);
            let new_chi2 = sum_sq(&trial);
            if new_chi2.is_finite() && new_chi2 <= chi2 {
                let decrease = (chi2 - new_chi2) / chi2.max(f64::MIN_POSITIVE);
                let small_step = step
                    .iter()
                    .zip(&params)
                    .zip(scales)
                    .all(|((d, x), s)| d.abs() <= 1e-12 * (x.abs() + s.abs()));
                params = candidate;
                std::mem::swap(&mut r, &mut trial);
                chi2 = new_chi2;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if decrease < options.tolerance || small_step {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !improved {
            // No downhill step at any damping: a minimum to working precision.
            converged = true;
            break;
        }
    }

    let residual_rms = (chi2 / n_points as f64).sqrt();
    if !converged {
        return Err(Error::FitConvergence {
            iterations,
            residual_rms,
        });
    }
    jacobian(&residuals, &params, scales, &mut jac);
    let jtj = jac.transpose() * &jac;
    let dof = (n_points - p) as f64;
    let covariance = jtj
        .clone()
        .try_inverse()
        .or_else(|| jtj.pseudo_inverse(1e-300).ok())
        .ok_or_else(|| Error::Numerical("singular normal matrix".into()))?
        * (chi2 / dof);
    let std_errors = (0..p).map(|j| covariance[(j, j)].max(0.0).sqrt()).collect();
    Ok(FitResult {
        params,
        std_errors,
        covariance,
        residual_rms,
        chi2,
        iterations,
    })
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn jacobian<F>(residuals: &F, params: &[f64], scales: &[f64], jac: &mut DMatrix<f64>)
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = jac.nrows();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut shifted = params.to_vec();
    for j in 0..params.len() {
        let h = 1e-6 * params[j].abs().max(scales[j].abs()).max(f64::MIN_POSITIVE);
        shifted[j] = params[j] + h;
        residuals(&shifted, &mut plus);
        shifted[j] = params[j] - h;
        residuals(&shifted, &mut minus);
        shifted[j] = params[j];
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
}
