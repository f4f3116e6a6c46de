//! Joint nonlinear least-squares fit of squeezing and antisqueezing curves
//! versus pump power, in dB space, plus Monte-Carlo propagation of the fitted
//! uncertainties to the loss-corrected squeezing generated in the waveguide.
//!
//! The fit minimizes
//!
//! ```text
//! S = Σ_points Σ_quadratures [(model_db − data_db) / σ_db]²
//! ```
//!
//! with the model evaluated by [`noise_model::variance_model`] and converted to
//! dB. Internally the parameters are mapped to unconstrained coordinates
//! (logit for η, log for α, δ and EN through squaring) so the damped
//! Gauss-Newton engine in [`optim`] needs no projection logic.

pub mod optim;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::noise_model::{
    self, db_to_lin, invert_loss_model, lin_to_db, variance_model, LossBudget, NoiseModelError,
    NoiseParams, Quadrature,
};
use optim::{LeastSquares, Minimum, Settings};

const LN10_OVER_10: f64 = std::f64::consts::LN_10 / 10.0;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("curve invalid: {0}")]
    BadCurve(String),
    #[error(transparent)]
    Model(#[from] NoiseModelError),
    #[error("optimizer failed: {0}")]
    Optim(#[from] optim::OptimError),
    #[error(
        "fit did not converge after {iterations} iterations; best objective {objective:.6e} at eta={eta:.4}, delta={delta:.4}, alpha={alpha:.3}"
    )]
    NoConvergence {
        iterations: usize,
        objective: f64,
        eta: f64,
        delta: f64,
        alpha: f64,
    },
    #[error("Monte-Carlo needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error(
        "{rejected} of {total} Monte-Carlo samples fell below the loss floor; review eta/delta/v_meas"
    )]
    ExcessiveRejection { rejected: usize, total: usize },
}

/// One pump-power point of a measured squeezing/antisqueezing curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub pump_w: f64,
    pub v_minus_db: f64,
    pub v_plus_db: f64,
    pub sigma_minus_db: f64,
    pub sigma_plus_db: f64,
}

/// Pump-power-indexed squeezing/antisqueezing observations in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredCurve {
    points: Vec<CurvePoint>,
    pub sideband_hz: f64,
    pub rbw_hz: f64,
}

impl MeasuredCurve {
    pub fn new(points: Vec<CurvePoint>, sideband_hz: f64, rbw_hz: f64) -> Result<Self, FitError> {
        if points.len() < 4 {
            return Err(FitError::BadCurve(format!(
                "need at least 4 points for a 3-parameter fit, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.pump_w >= 0.0) {
                return Err(FitError::BadCurve(format!(
                    "point {i}: pump power {} is negative",
                    p.pump_w
                )));
            }
            if i > 0 && points[i - 1].pump_w >= p.pump_w {
                return Err(FitError::BadCurve(format!(
                    "pump powers must be strictly increasing (point {i})"
                )));
            }
            if !(p.sigma_minus_db > 0.0 && p.sigma_plus_db > 0.0) {
                return Err(FitError::BadCurve(format!("point {i}: sigmas must be > 0")));
            }
            for v in [p.v_minus_db, p.v_plus_db] {
                if !v.is_finite() {
                    return Err(FitError::BadCurve(format!("point {i}: non-finite level")));
                }
            }
        }
        Ok(Self {
            points,
            sideband_hz,
            rbw_hz,
        })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }
}

/// Fit output: parameters, their 1σ uncertainties, and the scaled
/// Gauss-Newton covariance (3×3 with EN fixed, 4×4 with EN free; parameter
/// order η, δ, α[, EN]).
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: NoiseParams,
    pub sigma_eta: f64,
    pub sigma_delta: f64,
    pub sigma_alpha: f64,
    /// None when EN was fixed during the fit.
    pub sigma_en: Option<f64>,
    pub covariance: DMatrix<f64>,
    /// √(Σ r²) of the weighted residuals at the optimum.
    pub residual_norm: f64,
    /// Weighted residuals, all squeezed-quadrature rows first, then all
    /// antisqueezed rows, in pump-power order.
    pub per_point_residuals: Vec<f64>,
    pub iterations: usize,
    /// Set when the normal matrix was rank-deficient at the optimum and the
    /// covariance fell back to a pseudo-inverse.
    pub degenerate: bool,
}

impl FitResult {
    /// A result carrying externally supplied parameters and sigmas, for
    /// propagation runs that do not start from an in-repo fit.
    pub fn from_parts(params: NoiseParams, sigma_eta: f64, sigma_delta: f64) -> Self {
        Self {
            params,
            sigma_eta,
            sigma_delta,
            sigma_alpha: 0.0,
            sigma_en: None,
            covariance: DMatrix::zeros(3, 3),
            residual_norm: 0.0,
            per_point_residuals: Vec::new(),
            iterations: 0,
            degenerate: false,
        }
    }
}

/// dB-space model for one quadrature.
pub fn model_db(pump_w: f64, params: &NoiseParams, quad: Quadrature) -> f64 {
    lin_to_db(variance_model(pump_w, params, quad).expect("valid model inputs"))
        .expect("positive variance")
}

/// Analytic partial derivatives of the dB-space model with respect to the
/// physical parameters (η, δ, α, EN).
///
/// Rows: one per pump power for the squeezed quadrature, then one per pump
/// power for the antisqueezed quadrature. Columns: η, δ, α, EN.
pub fn model_jacobian(params: &NoiseParams, powers: &[f64]) -> DMatrix<f64> {
    let n = powers.len();
    let mut jac = DMatrix::zeros(2 * n, 4);
    for (i, &pump_w) in powers.iter().enumerate() {
        for (block, quad) in [Quadrature::Squeezed, Quadrature::Antisqueezed]
            .into_iter()
            .enumerate()
        {
            let row = block * n + i;
            let d = model_derivatives(pump_w, params, quad);
            jac[(row, 0)] = d[0];
            jac[(row, 1)] = d[1];
            jac[(row, 2)] = d[2];
            jac[(row, 3)] = d[3];
        }
    }
    jac
}

fn model_derivatives(pump_w: f64, params: &NoiseParams, quad: Quadrature) -> [f64; 4] {
    let eta = params.eta_total;
    let two_r = 2.0 * params.alpha * pump_w.sqrt();
    let (ep, em) = (two_r.exp(), (-two_r).exp());
    let (c2, s2) = (params.delta.cos().powi(2), params.delta.sin().powi(2));
    let sin_2d = (2.0 * params.delta).sin();
    let (bracket, dbracket_dr, dbracket_dd) = match quad {
        Quadrature::Squeezed => (
            em * c2 + ep * s2,
            -2.0 * em * c2 + 2.0 * ep * s2,
            sin_2d * (ep - em),
        ),
        Quadrature::Antisqueezed => (
            ep * c2 + em * s2,
            2.0 * ep * c2 - 2.0 * em * s2,
            sin_2d * (em - ep),
        ),
    };
    let v = eta * bracket + 1.0 - eta + params.electronic_noise;
    let to_db = 1.0 / (LN10_OVER_10 * v);
    [
        to_db * (bracket - 1.0),
        to_db * eta * dbracket_dd,
        to_db * eta * dbracket_dr * pump_w.sqrt(),
        to_db,
    ]
}

// Unconstrained internal coordinates for the optimizer.
fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct VarianceProblem<'a> {
    curve: &'a MeasuredCurve,
    fixed_en: Option<f64>,
}

impl VarianceProblem<'_> {
    fn n_free(&self) -> usize {
        if self.fixed_en.is_some() {
            3
        } else {
            4
        }
    }

    fn to_physical(&self, p: &DVector<f64>) -> NoiseParams {
        NoiseParams {
            eta_total: sigmoid(p[0]),
            delta: p[1] * p[1],
            alpha: p[2].exp(),
            electronic_noise: match self.fixed_en {
                Some(en) => en,
                None => p[3] * p[3],
            },
        }
    }

    /// δ enters the model only through sin²/cos², so the optimizer may park
    /// it anywhere on the periodic landscape; fold the result into [0, π/2].
    fn canonicalized(&self, params: NoiseParams) -> NoiseParams {
        let mut delta = params.delta.rem_euclid(std::f64::consts::PI);
        if delta > std::f64::consts::FRAC_PI_2 {
            delta = std::f64::consts::PI - delta;
        }
        NoiseParams { delta, ..params }
    }

    /// d(physical)/d(internal) for each free parameter.
    fn chain(&self, p: &DVector<f64>, params: &NoiseParams) -> Vec<f64> {
        let mut chain = vec![
            params.eta_total * (1.0 - params.eta_total),
            2.0 * p[1],
            params.alpha,
        ];
        if self.fixed_en.is_none() {
            chain.push(2.0 * p[3]);
        }
        chain
    }
}

impl LeastSquares for VarianceProblem<'_> {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let params = self.to_physical(p);
        let pts = self.curve.points();
        let n = pts.len();
        let mut r = DVector::zeros(2 * n);
        for (i, pt) in pts.iter().enumerate() {
            r[i] = (model_db(pt.pump_w, &params, Quadrature::Squeezed) - pt.v_minus_db)
                / pt.sigma_minus_db;
            r[n + i] = (model_db(pt.pump_w, &params, Quadrature::Antisqueezed) - pt.v_plus_db)
                / pt.sigma_plus_db;
        }
        r
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let params = self.to_physical(p);
        let pts = self.curve.points();
        let n = pts.len();
        let powers: Vec<f64> = pts.iter().map(|pt| pt.pump_w).collect();
        let phys = model_jacobian(&params, &powers);
        let chain = self.chain(p, &params);
        let k = self.n_free();
        let mut jac = DMatrix::zeros(2 * n, k);
        for i in 0..n {
            for j in 0..k {
                jac[(i, j)] = phys[(i, j)] * chain[j] / pts[i].sigma_minus_db;
                jac[(n + i, j)] = phys[(n + i, j)] * chain[j] / pts[i].sigma_plus_db;
            }
        }
        jac
    }
}

/// Deterministic, data-driven starting point.
fn initial_guess(curve: &MeasuredCurve, fixed_en: Option<f64>) -> DVector<f64> {
    let pts = curve.points();
    let min_sq_db = pts
        .iter()
        .map(|p| p.v_minus_db)
        .fold(f64::INFINITY, f64::min);
    let eta0 = (1.0 - db_to_lin(min_sq_db).unwrap_or(0.5)).clamp(0.3, 0.95);

    // Slope of ln(linear antisqueezing) against 2√P.
    let xs: Vec<f64> = pts.iter().map(|p| 2.0 * p.pump_w.sqrt()).collect();
    let ys: Vec<f64> = pts
        .iter()
        .map(|p| db_to_lin(p.v_plus_db).unwrap_or(1.0).max(1e-9).ln())
        .collect();
    let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - xbar) * (y - ybar);
        den += (x - xbar) * (x - xbar);
    }
    let alpha0 = if den > 0.0 {
        (num / den).clamp(0.1, 100.0)
    } else {
        1.0
    };

    // A starting δ of exactly zero sits on a stationary point of the model,
    // so the guess uses 1 mrad instead.
    let delta0: f64 = 1e-3;

    let mut start = vec![logit(eta0), delta0.sqrt(), alpha0.ln()];
    if fixed_en.is_none() {
        start.push(0.02_f64.sqrt());
    }
    DVector::from_vec(start)
}

/// Joint fit of both quadratures. `fix_en` holds the electronic noise at the
/// supplied linear value (measured independently from the clearance);
/// `None` lets the fit float it.
pub fn fit_variance_model(
    curve: &MeasuredCurve,
    fix_en: Option<f64>,
) -> Result<FitResult, FitError> {
    let problem = VarianceProblem {
        curve,
        fixed_en: fix_en,
    };
    let start = initial_guess(curve, fix_en);
    let settings = Settings::default();
    let min: Minimum = optim::minimize(&problem, start, &settings)?;
    let params = problem.canonicalized(problem.to_physical(&min.params));
    if !min.converged {
        return Err(FitError::NoConvergence {
            iterations: min.iterations,
            objective: min.objective,
            eta: params.eta_total,
            delta: params.delta,
            alpha: params.alpha,
        });
    }

    // Covariance in physical coordinates, scaled by the reduced chi-square.
    let pts = curve.points();
    let n = pts.len();
    let powers: Vec<f64> = pts.iter().map(|p| p.pump_w).collect();
    let phys_full = model_jacobian(&params, &powers);
    let k = problem.n_free();
    let mut weighted = DMatrix::zeros(2 * n, k);
    for i in 0..n {
        for j in 0..k {
            weighted[(i, j)] = phys_full[(i, j)] / pts[i].sigma_minus_db;
            weighted[(n + i, j)] = phys_full[(n + i, j)] / pts[i].sigma_plus_db;
        }
    }
    let (covariance, degenerate) = optim::covariance(&weighted, min.objective);
    let sigma = |i: usize| covariance[(i, i)].max(0.0).sqrt();

    // Near δ = 0 the model is stationary in δ (the response is quadratic),
    // so the linear-propagation sigma collapses; quote the quartic-mode
    // 1σ bound instead: the δ at which the objective rises by one.
    let mut sigma_delta = sigma(1);
    let quartic = quartic_delta_sigma(&params, &powers, pts);
    if params.delta < quartic {
        sigma_delta = sigma_delta.max(quartic);
    }

    Ok(FitResult {
        sigma_eta: sigma(0),
        sigma_delta,
        sigma_alpha: sigma(2),
        sigma_en: fix_en.is_none().then(|| sigma(3)),
        params,
        covariance,
        residual_norm: min.objective.sqrt(),
        per_point_residuals: min.residuals.iter().cloned().collect(),
        iterations: min.iterations,
        degenerate,
    })
}

/// 1σ bound on δ from the quartic objective growth at the δ = 0 stationary
/// point: residuals respond as w·δ², so ΔS = 1 at δ = (Σw²)^(−1/4).
fn quartic_delta_sigma(params: &NoiseParams, powers: &[f64], pts: &[CurvePoint]) -> f64 {
    let mut sum_w2 = 0.0;
    for (i, &pump_w) in powers.iter().enumerate() {
        let two_r = 2.0 * params.alpha * pump_w.sqrt();
        let spread = (two_r.exp() - (-two_r).exp()).abs();
        for (quad, sigma_db) in [
            (Quadrature::Squeezed, pts[i].sigma_minus_db),
            (Quadrature::Antisqueezed, pts[i].sigma_plus_db),
        ] {
            let v = variance_model(pump_w, params, quad).expect("valid model inputs");
            let w = params.eta_total * spread / (LN10_OVER_10 * v * sigma_db);
            sum_w2 += w * w;
        }
    }
    if sum_w2 > 0.0 {
        sum_w2.powf(-0.25)
    } else {
        f64::INFINITY
    }
}

/// Monte-Carlo propagation result with asymmetric error bars.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    /// Median of the pooled inversion solutions, dB.
    pub central_db: f64,
    /// 84th-percentile distance above the median, dB ≥ 0.
    pub upper_err_db: f64,
    /// 16th-percentile distance below the median, dB ≥ 0.
    pub lower_err_db: f64,
    pub n_samples: usize,
    /// Draws below the hard loss floor (no solution for any squeezing).
    pub n_rejected: usize,
    /// Draws below the sampled phase-noise floor, represented by the floor's
    /// coincident double root.
    pub n_floor_clamped: usize,
}

/// Linear-interpolation percentile of a sorted slice, q ∈ [0, 1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = q * (sorted.len() - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = idx - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Propagates the fitted (η, δ) and measured squeezing uncertainties to the
/// squeezing generated in the waveguide.
///
/// Each sample draws (η, δ, v_meas) from independent normals (δ reflected at
/// zero) on its own counter-based RNG substream, inverts the loss model, and
/// contributes the full solution set of the inversion quadratic: both roots
/// when the sample is above its phase-noise floor, the coincident double root
/// when below it. Draws below the hard loss floor 1 − η have no solution and
/// are counted in `n_rejected`. The pooled distribution keeps the shallow-
/// and deep-root branches, which is what makes the reported lower error bar
/// much larger than the upper one when operating near the loss-limited bound.
pub fn propagate_waveguide_squeezing(
    fit: &FitResult,
    v_meas_db: f64,
    v_meas_sigma_db: f64,
    n: usize,
    seed: u64,
) -> Result<PropagationResult, FitError> {
    const MIN_SAMPLES: usize = 10_000;
    if n < MIN_SAMPLES {
        return Err(FitError::TooFewSamples {
            min: MIN_SAMPLES,
            got: n,
        });
    }
    let eta_dist = normal_or_point(fit.params.eta_total, fit.sigma_eta);
    let delta_dist = normal_or_point(fit.params.delta, fit.sigma_delta);
    let v_dist = normal_or_point(v_meas_db, v_meas_sigma_db);

    let mut pooled: Vec<f64> = Vec::with_capacity(2 * n);
    let mut n_rejected = 0usize;
    let mut n_floor_clamped = 0usize;
    for i in 0..n {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        let eta = sample(&eta_dist, &mut rng);
        let delta = sample(&delta_dist, &mut rng).abs();
        let v_db = sample(&v_dist, &mut rng);
        if !(eta > 0.0 && eta <= 1.0) || delta >= std::f64::consts::FRAC_PI_2 {
            n_rejected += 1;
            continue;
        }
        let v = db_to_lin(v_db)?;
        match invert_loss_model(v, eta, delta) {
            Ok((deep, shallow)) => {
                pooled.push(lin_to_db(deep)?);
                if deep != shallow {
                    pooled.push(lin_to_db(shallow)?);
                }
            }
            Err(NoiseModelError::BelowLossFloor { .. }) => {
                if v > 1.0 - eta {
                    // Below the phase-noise floor only: the closest model
                    // solution is the floor's double root x = tan δ.
                    n_floor_clamped += 1;
                    pooled.push(lin_to_db(delta.tan())?);
                } else {
                    n_rejected += 1;
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    if 2 * n_rejected > n {
        return Err(FitError::ExcessiveRejection {
            rejected: n_rejected,
            total: n,
        });
    }
    pooled.sort_by(|a, b| a.partial_cmp(b).expect("finite dB values"));
    let central_db = percentile(&pooled, 0.5);
    let lower_err_db = central_db - percentile(&pooled, 0.16);
    let upper_err_db = percentile(&pooled, 0.84) - central_db;
    Ok(PropagationResult {
        central_db,
        upper_err_db,
        lower_err_db,
        n_samples: n,
        n_rejected,
        n_floor_clamped,
    })
}

enum MaybeNormal {
    Point(f64),
    Normal(Normal<f64>),
}

fn normal_or_point(mean: f64, sigma: f64) -> MaybeNormal {
    if sigma > 0.0 {
        MaybeNormal::Normal(Normal::new(mean, sigma).expect("finite mean and sigma"))
    } else {
        MaybeNormal::Point(mean)
    }
}

fn sample<R: Rng>(dist: &MaybeNormal, rng: &mut R) -> f64 {
    match dist {
        MaybeNormal::Point(v) => *v,
        MaybeNormal::Normal(n) => n.sample(rng),
    }
}

/// Forward-propagates a generated squeezing level through only the named
/// budget entries (e.g. waveguide + displacement for an SRS projection, or
/// waveguide only for an on-chip one). An empty subset is the identity.
pub fn project_application_squeezing(
    generated_db: f64,
    budget: &LossBudget,
    labels: &[&str],
) -> Result<f64, FitError> {
    let mut v = db_to_lin(generated_db)?;
    for label in labels {
        let eta = budget
            .get(label)
            .ok_or_else(|| FitError::BadCurve(format!("unknown loss budget label: {label}")))?;
        v = noise_model::apply_loss(v, eta)?;
    }
    Ok(lin_to_db(v)?)
}

#[cfg(test)]
mod tests;
