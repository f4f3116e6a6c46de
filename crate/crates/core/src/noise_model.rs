//! Forward evaluation, loss algebra, and inversion of the squeezing variance
//! model
//!
//! ```text
//! V±(P) = η [ e^(±2α√P) cos²δ + e^(∓2α√P) sin²δ ] + 1 − η + EN
//! ```
//!
//! with `−` the squeezed and `+` the antisqueezed quadrature. All variances
//! are linear and normalized to shot noise = 1; pump power `P` is in watts
//! and the pump-coupling coefficient `α` in W^(−1/2).

use thiserror::Error;

const LN10_OVER_10: f64 = std::f64::consts::LN_10 / 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseModelError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("pump power must be >= 0, got {0}")]
    NegativePump(f64),
    #[error("efficiency must lie in (0, 1], got {0}")]
    BadEfficiency(f64),
    #[error("invalid parameter {name}: {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("measured variance {v_meas} is at or below the electronic noise floor {floor}")]
    BelowNoiseFloor { v_meas: f64, floor: f64 },
    #[error(
        "measured variance {v_meas} is below the loss floor {floor} reachable for eta={eta}, delta={delta}"
    )]
    BelowLossFloor {
        v_meas: f64,
        floor: f64,
        eta: f64,
        delta: f64,
    },
}

/// Parameter set of the variance model: detection efficiency, residual
/// phase-noise angle, pump coupling, and shot-noise-relative electronic noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Total detection efficiency η ∈ (0, 1].
    pub eta_total: f64,
    /// Phase-noise angle δ in radians, 0 ≤ δ < π/2.
    pub delta: f64,
    /// Pump-coupling coefficient α in W^(−1/2); the squeezing parameter is
    /// r = α√P.
    pub alpha: f64,
    /// Electronic noise as a linear variance relative to shot noise, ≥ 0.
    pub electronic_noise: f64,
}

impl NoiseParams {
    pub fn new(
        eta_total: f64,
        delta: f64,
        alpha: f64,
        electronic_noise: f64,
    ) -> Result<Self, NoiseModelError> {
        if !(eta_total > 0.0 && eta_total <= 1.0) {
            return Err(NoiseModelError::BadEfficiency(eta_total));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&delta) {
            return Err(NoiseModelError::BadParameter {
                name: "delta",
                value: delta,
            });
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(NoiseModelError::BadParameter {
                name: "alpha",
                value: alpha,
            });
        }
        if !(electronic_noise >= 0.0 && electronic_noise.is_finite()) {
            return Err(NoiseModelError::BadParameter {
                name: "electronic_noise",
                value: electronic_noise,
            });
        }
        Ok(Self {
            eta_total,
            delta,
            alpha,
            electronic_noise,
        })
    }
}

/// Which quadrature of the variance model to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Squeezed,
    Antisqueezed,
}

/// Squeezed/antisqueezed variance pair in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePair {
    pub v_minus: f64,
    pub v_plus: f64,
}

/// Named chain of efficiency factors composing to a total efficiency.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossBudget {
    entries: Vec<(String, f64)>,
}

impl LossBudget {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: &str, efficiency: f64) -> Result<(), NoiseModelError> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(NoiseModelError::BadEfficiency(efficiency));
        }
        self.entries.push((label.to_owned(), efficiency));
        Ok(())
    }

    pub fn from_entries<'a, I>(entries: I) -> Result<Self, NoiseModelError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut budget = Self::new();
        for (label, eta) in entries {
            budget.push(label, eta)?;
        }
        Ok(budget)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(l, _)| l == label)
            .map(|&(_, eta)| eta)
    }

    /// Product of the named entries, or an error naming the first unknown label.
    pub fn compose_subset(&self, labels: &[&str]) -> Result<f64, NoiseModelError> {
        let mut product = 1.0;
        for label in labels {
            match self.get(label) {
                Some(eta) => product *= eta,
                None => {
                    return Err(NoiseModelError::BadParameter {
                        name: "unknown budget label",
                        value: f64::NAN,
                    })
                }
            }
        }
        Ok(product)
    }
}

/// Decibels to linear power ratio: 10^(x/10).
pub fn db_to_lin(x: f64) -> Result<f64, NoiseModelError> {
    if !x.is_finite() {
        return Err(NoiseModelError::NonFinite("db_to_lin input"));
    }
    Ok((x * LN10_OVER_10).exp())
}

/// Linear power ratio to decibels: 10·log10(v).
pub fn lin_to_db(v: f64) -> Result<f64, NoiseModelError> {
    if !(v.is_finite() && v > 0.0) {
        return Err(NoiseModelError::NonFinite("lin_to_db input"));
    }
    Ok(v.ln() / LN10_OVER_10)
}

/// Variance of one quadrature at pump power `pump_w` (watts).
///
/// At `pump_w = 0` both quadratures return exactly `1 + EN`, the shot-noise
/// reference obtained by blocking the pump.
pub fn variance_model(
    pump_w: f64,
    params: &NoiseParams,
    quad: Quadrature,
) -> Result<f64, NoiseModelError> {
    if !(pump_w >= 0.0) {
        return Err(NoiseModelError::NegativePump(pump_w));
    }
    if pump_w == 0.0 {
        return Ok(1.0 + params.electronic_noise);
    }
    let two_r = 2.0 * params.alpha * pump_w.sqrt();
    let (cos_d, sin_d) = (params.delta.cos(), params.delta.sin());
    let (c2, s2) = (cos_d * cos_d, sin_d * sin_d);
    let bracket = match quad {
        Quadrature::Squeezed => (-two_r).exp() * c2 + two_r.exp() * s2,
        Quadrature::Antisqueezed => two_r.exp() * c2 + (-two_r).exp() * s2,
    };
    Ok(params.eta_total * bracket + 1.0 - params.eta_total + params.electronic_noise)
}

/// Both quadratures at once.
pub fn variance_pair(pump_w: f64, params: &NoiseParams) -> Result<QuadraturePair, NoiseModelError> {
    Ok(QuadraturePair {
        v_minus: variance_model(pump_w, params, Quadrature::Squeezed)?,
        v_plus: variance_model(pump_w, params, Quadrature::Antisqueezed)?,
    })
}

/// Beam-splitter loss model: η·v + 1 − η. Shot noise (v = 1) is a fixed point.
pub fn apply_loss(v: f64, eta: f64) -> Result<f64, NoiseModelError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(NoiseModelError::NonFinite("apply_loss variance"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(NoiseModelError::BadEfficiency(eta));
    }
    Ok(eta * v + 1.0 - eta)
}

/// Product of all budget entries. An empty budget composes to 1 and raises
/// the returned warning flag.
pub fn compose(budget: &LossBudget) -> (f64, bool) {
    let empty = budget.is_empty();
    let product = budget.entries().iter().map(|&(_, eta)| eta).product();
    (product, empty)
}

/// Electronic-noise subtraction in dB: both the signal and the shot-noise
/// reference are corrected for the detector noise floor,
/// `(v − EN) / (1 − EN)` with `EN = 10^(−clearance/10)`.
pub fn subtract_electronic_noise(
    v_meas_db: f64,
    en_clearance_db: f64,
) -> Result<f64, NoiseModelError> {
    if !(en_clearance_db > 0.0) {
        return Err(NoiseModelError::BadParameter {
            name: "en_clearance_db",
            value: en_clearance_db,
        });
    }
    let en = db_to_lin(-en_clearance_db)?;
    let v = db_to_lin(v_meas_db)?;
    if v <= en {
        return Err(NoiseModelError::BelowNoiseFloor {
            v_meas: v,
            floor: en,
        });
    }
    lin_to_db((v - en) / (1.0 - en))
}

/// Both real roots of the loss-model inversion for `x = e^(−2α√P)`, ordered
/// `(deep, shallow)` with deep ≤ shallow, in linear variance units.
///
/// Solves `x·cos²δ + sin²δ/x = (v − 1 + η)/η`, a quadratic in `x`. For
/// δ > 0 and a measured variance above the phase-noise floor the equation has
/// two positive roots: the shallow root (less generated squeezing, partially
/// masked by phase noise) and the deep root (more generated squeezing whose
/// measured level is dominated by phase-noise-injected antisqueezing).
pub fn invert_loss_model(
    v_meas_lin: f64,
    eta: f64,
    delta: f64,
) -> Result<(f64, f64), NoiseModelError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(NoiseModelError::BadEfficiency(eta));
    }
    let m = (v_meas_lin - 1.0 + eta) / eta;
    if m <= 0.0 {
        // Below the hard loss floor 1 − η: no x > 0 reproduces the measurement.
        return Err(NoiseModelError::BelowLossFloor {
            v_meas: v_meas_lin,
            floor: 1.0 - eta,
            eta,
            delta,
        });
    }
    let (cos_d, sin_d) = (delta.cos(), delta.sin());
    let (c2, s2) = (cos_d * cos_d, sin_d * sin_d);
    let disc = m * m - 4.0 * c2 * s2;
    if disc < 0.0 {
        // Below the phase-noise floor η·sin(2δ) + 1 − η for this δ.
        let floor = eta * (2.0 * sin_d * cos_d) + 1.0 - eta;
        return Err(NoiseModelError::BelowLossFloor {
            v_meas: v_meas_lin,
            floor,
            eta,
            delta,
        });
    }
    let sqrt_disc = disc.sqrt();
    let shallow = (m + sqrt_disc) / (2.0 * c2);
    let deep = if delta == 0.0 {
        shallow
    } else {
        (m - sqrt_disc) / (2.0 * c2)
    };
    Ok((deep, shallow))
}

/// Generated squeezing inferred from an EN-subtracted measured level.
///
/// Root selection: with a measured antisqueezing level supplied, the root
/// whose implied antisqueezing is closest to it wins; otherwise the shallow
/// root (the conservative estimate) is returned. Output in dB.
pub fn infer_generated_squeezing(
    v_meas_db: f64,
    eta: f64,
    delta: f64,
    v_plus_db: Option<f64>,
) -> Result<f64, NoiseModelError> {
    let v = db_to_lin(v_meas_db)?;
    let (deep, shallow) = invert_loss_model(v, eta, delta)?;
    let x = match v_plus_db {
        None => shallow,
        Some(vp_db) => {
            let vp = db_to_lin(vp_db)?;
            let implied = |x: f64| -> f64 {
                let (c2, s2) = (delta.cos().powi(2), delta.sin().powi(2));
                eta * (c2 / x + x * s2) + 1.0 - eta
            };
            if (implied(deep) - vp).abs() < (implied(shallow) - vp).abs() {
                deep
            } else {
                shallow
            }
        }
    };
    lin_to_db(x)
}

/// Generated squeezing in dB implied by the pump-coupling coefficient at a
/// given pump power: 10·log10(e^(−2α√P)).
pub fn generated_db_from_alpha(alpha: f64, pump_w: f64) -> Result<f64, NoiseModelError> {
    if !(pump_w >= 0.0) {
        return Err(NoiseModelError::NegativePump(pump_w));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(NoiseModelError::BadParameter {
            name: "alpha",
            value: alpha,
        });
    }
    Ok(-2.0 * alpha * pump_w.sqrt() / LN10_OVER_10)
}
