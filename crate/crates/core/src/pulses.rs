//! Gaussian pulse-duration extraction from interferometric visibility scans
//! and temporal-overlap metrics between the local oscillator and the
//! squeezed field.
//!
//! All durations are intensity FWHM in picoseconds. For a transform-limited
//! Gaussian pulse of intensity FWHM τ the field-autocorrelation visibility is
//! `V(Δ) = A·exp(−ln2·Δ²/τ²)`, i.e. the visibility falls to half its peak at
//! a delay of exactly τ.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::curve_fit::optim::{self, LeastSquares, Settings};

#[derive(Debug, Error)]
pub enum PulseError {
    #[error("visibility scan invalid: {0}")]
    BadScan(String),
    #[error("pulse duration must be > 0, got {0}")]
    BadDuration(f64),
    #[error(transparent)]
    Optim(#[from] optim::OptimError),
    #[error(
        "pulse fit did not converge after {iterations} iterations (objective {objective:.3e})"
    )]
    NoConvergence { iterations: usize, objective: f64 },
}

/// One visibility measurement: delay (ps), visibility ∈ [0, 1], 1σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityPoint {
    pub delay_ps: f64,
    pub visibility: f64,
    pub sigma: f64,
}

/// Interferometric visibility scan for one wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityScan {
    points: Vec<VisibilityPoint>,
    pub wavelength_nm: u32,
}

impl VisibilityScan {
    pub fn new(points: Vec<VisibilityPoint>, wavelength_nm: u32) -> Result<Self, PulseError> {
        if points.len() < 6 {
            return Err(PulseError::BadScan(format!(
                "need at least 6 points, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.visibility) {
                return Err(PulseError::BadScan(format!(
                    "point {i}: visibility {} outside [0, 1]",
                    p.visibility
                )));
            }
            if !(p.sigma > 0.0) {
                return Err(PulseError::BadScan(format!("point {i}: sigma must be > 0")));
            }
            if !p.delay_ps.is_finite() {
                return Err(PulseError::BadScan(format!("point {i}: non-finite delay")));
            }
        }
        Ok(Self {
            points,
            wavelength_nm,
        })
    }

    pub fn points(&self) -> &[VisibilityPoint] {
        &self.points
    }
}

/// Fitted Gaussian pulse parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseFit {
    /// Intensity FWHM, ps.
    pub tau_fwhm_ps: f64,
    /// 1σ on the FWHM, ps.
    pub tau_sigma_ps: f64,
    pub amplitude: f64,
    pub center_ps: f64,
    pub iterations: usize,
}

/// Field-autocorrelation visibility of a transform-limited Gaussian pulse:
/// `A·exp(−(Δ−c)²/(4σ²))` with `σ = τ/(2√ln2)`.
pub fn visibility_model(delay_ps: f64, tau_fwhm_ps: f64, amplitude: f64, center_ps: f64) -> f64 {
    let q = delay_ps - center_ps;
    amplitude * (-std::f64::consts::LN_2 * q * q / (tau_fwhm_ps * tau_fwhm_ps)).exp()
}

struct PulseProblem<'a> {
    scan: &'a VisibilityScan,
}

// Internal coordinates: (ln A, ln τ, center).
impl PulseProblem<'_> {
    fn physical(p: &DVector<f64>) -> (f64, f64, f64) {
        (p[0].exp(), p[1].exp(), p[2])
    }
}

impl LeastSquares for PulseProblem<'_> {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let (amp, tau, center) = Self::physical(p);
        DVector::from_iterator(
            self.scan.points().len(),
            self.scan.points().iter().map(|pt| {
                (visibility_model(pt.delay_ps, tau, amp, center) - pt.visibility) / pt.sigma
            }),
        )
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let (amp, tau, center) = Self::physical(p);
        let pts = self.scan.points();
        let mut jac = DMatrix::zeros(pts.len(), 3);
        for (i, pt) in pts.iter().enumerate() {
            let q = pt.delay_ps - center;
            let ln2 = std::f64::consts::LN_2;
            let model = visibility_model(pt.delay_ps, tau, amp, center);
            // Chain rule through ln A and ln τ.
            jac[(i, 0)] = model / pt.sigma;
            jac[(i, 1)] = model * 2.0 * ln2 * q * q / (tau * tau) / pt.sigma;
            jac[(i, 2)] = model * 2.0 * ln2 * q / (tau * tau) / pt.sigma;
        }
        jac
    }
}

/// Weighted least-squares Gaussian fit of a visibility scan.
pub fn fit_pulse(scan: &VisibilityScan) -> Result<PulseFit, PulseError> {
    let pts = scan.points();
    let peak = pts
        .iter()
        .cloned()
        .max_by(|a, b| a.visibility.total_cmp(&b.visibility))
        .expect("non-empty scan");
    let amp0 = peak.visibility.clamp(1e-3, 1.0);
    let center0 = peak.delay_ps;
    // Half-visibility sits one FWHM from the peak.
    let tau0 = pts
        .iter()
        .filter(|p| p.visibility < amp0 / 2.0)
        .map(|p| (p.delay_ps - center0).abs())
        .fold(f64::INFINITY, f64::min);
    let span = pts.last().unwrap().delay_ps - pts[0].delay_ps;
    let tau0 = if tau0.is_finite() { tau0 } else { span / 4.0 }.max(1e-3);

    let problem = PulseProblem { scan };
    let start = DVector::from_vec(vec![amp0.ln(), tau0.ln(), center0]);
    let min = optim::minimize(&problem, start, &Settings::default())?;
    if !min.converged {
        return Err(PulseError::NoConvergence {
            iterations: min.iterations,
            objective: min.objective,
        });
    }
    let (amplitude, tau_fwhm_ps, center_ps) = PulseProblem::physical(&min.params);

    // 1σ on τ from the physical-coordinate covariance.
    let mut phys_jac = problem.jacobian(&min.params);
    for i in 0..phys_jac.nrows() {
        phys_jac[(i, 0)] /= amplitude;
        phys_jac[(i, 1)] /= tau_fwhm_ps;
    }
    let (cov, _) = optim::covariance(&phys_jac, min.objective);
    Ok(PulseFit {
        tau_fwhm_ps,
        tau_sigma_ps: cov[(1, 1)].max(0.0).sqrt(),
        amplitude,
        center_ps,
        iterations: min.iterations,
    })
}

/// Intensity-profile overlap of two Gaussian pulses: 2·τa·τb/(τa² + τb²).
pub fn temporal_overlap(tau_a_ps: f64, tau_b_ps: f64) -> Result<f64, PulseError> {
    for &t in &[tau_a_ps, tau_b_ps] {
        if !(t > 0.0 && t.is_finite()) {
            return Err(PulseError::BadDuration(t));
        }
    }
    Ok(2.0 * tau_a_ps * tau_b_ps / (tau_a_ps * tau_a_ps + tau_b_ps * tau_b_ps))
}

/// Ratio of the measured pump duration to the ideal second-harmonic pump
/// duration, τ_lo/√2 (Gaussian pulses; the squeezed field inherits the pump
/// duration).
pub fn ideal_pump_ratio(tau_lo_ps: f64, tau_pump_ps: f64) -> Result<f64, PulseError> {
    for &t in &[tau_lo_ps, tau_pump_ps] {
        if !(t > 0.0 && t.is_finite()) {
            return Err(PulseError::BadDuration(t));
        }
    }
    Ok(tau_pump_ps / (tau_lo_ps / std::f64::consts::SQRT_2))
}
