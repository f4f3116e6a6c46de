//! Damped Gauss-Newton minimizer for small weighted least-squares problems.
//!
//! The damping follows the usual Levenberg-Marquardt recipe: the normal
//! matrix is augmented with `λ·diag(JᵀJ)`, and λ is scaled ×10 on a rejected
//! step and ÷10 on an accepted one.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("residuals or jacobian produced non-finite values at iteration {0}")]
    NonFinite(usize),
}

/// A weighted least-squares problem over an unconstrained parameter vector.
///
/// Implementors evaluate weighted residuals `r_i(x)` and the corresponding
/// Jacobian `∂r_i/∂x_j`; the objective is `S = Σ r_i²`.
pub trait LeastSquares {
    fn residuals(&self, params: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, params: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub max_iterations: usize,
    /// Stop when the relative objective decrease falls below this.
    pub ftol: f64,
    /// Stop when the accepted step norm falls below this.
    pub steptol: f64,
    pub initial_lambda: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            ftol: 1e-10,
            steptol: 1e-12,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub params: DVector<f64>,
    /// Final objective Σ r².
    pub objective: f64,
    pub residuals: DVector<f64>,
    pub iterations: usize,
    /// Objective after every accepted step, starting with the initial value.
    pub objective_trace: Vec<f64>,
    /// False when the iteration budget ran out; the fields then hold the
    /// best point found so far.
    pub converged: bool,
}

pub fn minimize<P: LeastSquares>(
    problem: &P,
    start: DVector<f64>,
    settings: &Settings,
) -> Result<Minimum, OptimError> {
    let mut params = start;
    let mut residuals = problem.residuals(&params);
    let mut objective = residuals.norm_squared();
    if !objective.is_finite() {
        return Err(OptimError::NonFinite(0));
    }
    let mut lambda = settings.initial_lambda;
    let mut trace = vec![objective];

    for iteration in 0..settings.max_iterations {
        let jac = problem.jacobian(&params);
        if jac.iter().any(|v| !v.is_finite()) {
            return Err(OptimError::NonFinite(iteration));
        }
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let gradient = &jt * &residuals;

        // Inner damping loop: grow λ until a step lowers the objective.
        let mut accepted = false;
        for _ in 0..32 {
            let mut damped = normal.clone();
            for i in 0..damped.nrows() {
                let d = normal[(i, i)];
                damped[(i, i)] = d + lambda * if d > 0.0 { d } else { 1.0 };
            }
            let step = match damped.cholesky() {
                Some(chol) => chol.solve(&gradient),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let candidate = &params - &step;
            let cand_residuals = problem.residuals(&candidate);
            let cand_objective = cand_residuals.norm_squared();
            if cand_objective.is_finite() && cand_objective <= objective {
                let rel_decrease = if objective > 0.0 {
                    (objective - cand_objective) / objective
                } else {
                    0.0
                };
                let step_norm = step.norm();
                params = candidate;
                residuals = cand_residuals;
                objective = cand_objective;
                trace.push(objective);
                lambda = (lambda / 10.0).max(1e-14);
                accepted = true;
                if rel_decrease < settings.ftol || step_norm < settings.steptol {
                    return Ok(Minimum {
                        params,
                        objective,
                        residuals,
                        iterations: iteration + 1,
                        objective_trace: trace,
                        converged: true,
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // Damping saturated without a downhill step: stationary to
            // working precision when the gradient has vanished, otherwise a
            // genuine failure reported through the converged flag.
            let stationary = gradient.norm() < 1e-10 * (1.0 + objective);
            return Ok(Minimum {
                params,
                objective,
                residuals,
                iterations: iteration + 1,
                objective_trace: trace,
                converged: stationary,
            });
        }
    }
    Ok(Minimum {
        params: params.clone(),
        objective,
        residuals,
        iterations: settings.max_iterations,
        objective_trace: trace,
        converged: false,
    })
}

/// Gauss-Newton covariance at the optimum: `(JᵀJ)⁻¹` scaled by the reduced
/// chi-square `S/(m − n)`. Near-singular normal matrices fall back to an
/// eigenvalue-thresholded pseudo-inverse and set the `degenerate` flag.
pub fn covariance(jacobian: &DMatrix<f64>, objective: f64) -> (DMatrix<f64>, bool) {
    let m = jacobian.nrows();
    let n = jacobian.ncols();
    let dof = m.saturating_sub(n).max(1) as f64;
    let scale = objective / dof;
    let normal = jacobian.transpose() * jacobian;
    let eig = normal.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let threshold = max_eig * 1e-12;
    let mut degenerate = false;
    let mut inv_eigs = eig.eigenvalues.clone();
    for v in inv_eigs.iter_mut() {
        if *v <= threshold {
            degenerate = true;
            *v = 0.0;
        } else {
            *v = 1.0 / *v;
        }
    }
    let cov = &eig.eigenvectors * DMatrix::from_diagonal(&inv_eigs) * eig.eigenvectors.transpose();
    (cov * scale, degenerate)
}
