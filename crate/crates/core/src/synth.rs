//! Seeded synthetic data generators: squeezing-vs-power curve samples,
//! spectrum-analyzer-like noise traces, and visibility scans.
//!
//! Everything here is a pure function of (configuration, seed): per-point
//! jitter comes from counter-based ChaCha substreams so regenerating with the
//! same seed is bit-identical regardless of call order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::curve_fit::{CurvePoint, FitError, MeasuredCurve};
use crate::noise_model::{lin_to_db, variance_pair, NoiseModelError, NoiseParams};
use crate::pulses::{visibility_model, PulseError, VisibilityPoint, VisibilityScan};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Model(#[from] NoiseModelError),
    #[error(transparent)]
    Curve(#[from] FitError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error("invalid generator config: {0}")]
    BadConfig(String),
}

/// Sigma stored on noiseless synthetic curves so the fit weights stay finite.
const NOISELESS_SIGMA_DB: f64 = 1e-4;

fn substream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples the variance model at the given pump powers (watts), converts to
/// dB, and adds Gaussian noise of `sigma_db` per point.
pub fn gen_curve(
    params: &NoiseParams,
    powers_w: &[f64],
    sigma_db: f64,
    seed: u64,
) -> Result<MeasuredCurve, SynthError> {
    if powers_w.is_empty() {
        return Err(SynthError::BadConfig("no pump powers given".into()));
    }
    let stored_sigma = if sigma_db > 0.0 {
        sigma_db
    } else {
        NOISELESS_SIGMA_DB
    };
    let mut points = Vec::with_capacity(powers_w.len());
    for (i, &pump_w) in powers_w.iter().enumerate() {
        let pair = variance_pair(pump_w, params)?;
        let mut v_minus_db = lin_to_db(pair.v_minus)?;
        let mut v_plus_db = lin_to_db(pair.v_plus)?;
        if sigma_db > 0.0 {
            let mut rng = substream(seed, i as u64 + 1);
            let gauss = Normal::new(0.0, sigma_db).expect("finite sigma");
            v_minus_db += gauss.sample(&mut rng);
            v_plus_db += gauss.sample(&mut rng);
        }
        points.push(CurvePoint {
            pump_w,
            v_minus_db,
            v_plus_db,
            sigma_minus_db: stored_sigma,
            sigma_plus_db: stored_sigma,
        });
    }
    Ok(MeasuredCurve::new(points, 20e6, 100e3)?)
}

/// Trace identity on a synthetic spectrum-analyzer screen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceLabel {
    Squeezed,
    Antisqueezed,
    Shot,
    Electronic,
}

impl TraceLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceLabel::Squeezed => "squeezed",
            TraceLabel::Antisqueezed => "antisqueezed",
            TraceLabel::Shot => "shot",
            TraceLabel::Electronic => "electronic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "squeezed" => Some(TraceLabel::Squeezed),
            "antisqueezed" => Some(TraceLabel::Antisqueezed),
            "shot" => Some(TraceLabel::Shot),
            "electronic" => Some(TraceLabel::Electronic),
            _ => None,
        }
    }
}

/// One spectrum-analyzer trace, levels in dB relative to shot noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub freqs_hz: Vec<f64>,
    pub levels_db: Vec<f64>,
    pub label: TraceLabel,
    pub rbw_hz: f64,
    pub seed: u64,
}

impl SpectrumTrace {
    /// Band-averaged level estimator: the mean dB level across the trace.
    pub fn band_average_db(&self) -> f64 {
        self.levels_db.iter().sum::<f64>() / self.levels_db.len() as f64
    }
}

/// Mean levels for the four synthetic traces. The shot trace sits at 0 dB by
/// definition; the electronic trace sits `clearance_db` below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumLevels {
    pub squeezed_db: f64,
    pub antisqueezed_db: f64,
    pub clearance_db: f64,
}

/// Generates flat squeezed/antisqueezed/shot/electronic traces over
/// `band_hz = (lo, hi)` with independent Gaussian per-point jitter of
/// `trace_noise_db` (spectrum-analyzer log-detector approximation).
pub fn gen_spectrum(
    levels: &SpectrumLevels,
    band_hz: (f64, f64),
    n_points: usize,
    trace_noise_db: f64,
    rbw_hz: f64,
    seed: u64,
) -> Result<Vec<SpectrumTrace>, SynthError> {
    let (lo, hi) = band_hz;
    if !(hi > lo) {
        return Err(SynthError::BadConfig(format!(
            "band width must be positive, got [{lo}, {hi}]"
        )));
    }
    if n_points < 2 {
        return Err(SynthError::BadConfig("need at least 2 trace points".into()));
    }
    let freqs: Vec<f64> = (0..n_points)
        .map(|i| lo + (hi - lo) * i as f64 / (n_points - 1) as f64)
        .collect();
    let means = [
        (TraceLabel::Squeezed, levels.squeezed_db),
        (TraceLabel::Antisqueezed, levels.antisqueezed_db),
        (TraceLabel::Shot, 0.0),
        (TraceLabel::Electronic, -levels.clearance_db),
    ];
    let traces = means
        .iter()
        .enumerate()
        .map(|(k, &(label, mean_db))| {
            let mut levels_db = vec![mean_db; n_points];
            if trace_noise_db > 0.0 {
                let mut rng = substream(seed, k as u64 + 1);
                let gauss = Normal::new(0.0, trace_noise_db).expect("finite sigma");
                for level in levels_db.iter_mut() {
                    *level += gauss.sample(&mut rng);
                }
            }
            SpectrumTrace {
                freqs_hz: freqs.clone(),
                levels_db,
                label,
                rbw_hz,
                seed,
            }
        })
        .collect();
    Ok(traces)
}

/// Synthetic visibility scan across `±span_ps` around the peak.
pub fn gen_visibility(
    tau_fwhm_ps: f64,
    amplitude: f64,
    center_ps: f64,
    span_ps: f64,
    n_points: usize,
    sigma: f64,
    wavelength_nm: u32,
    seed: u64,
) -> Result<VisibilityScan, SynthError> {
    if n_points < 6 {
        return Err(SynthError::BadConfig("need at least 6 scan points".into()));
    }
    if !(span_ps > 0.0 && tau_fwhm_ps > 0.0) {
        return Err(SynthError::BadConfig("span and tau must be > 0".into()));
    }
    let stored_sigma = if sigma > 0.0 { sigma } else { 1e-4 };
    let points = (0..n_points)
        .map(|i| {
            let delay = center_ps - span_ps + 2.0 * span_ps * i as f64 / (n_points - 1) as f64;
            let mut v = visibility_model(delay, tau_fwhm_ps, amplitude, center_ps);
            if sigma > 0.0 {
                let mut rng = substream(seed, i as u64 + 1);
                v += Normal::new(0.0, sigma)
                    .expect("finite sigma")
                    .sample(&mut rng);
            }
            VisibilityPoint {
                delay_ps: delay,
                visibility: v.clamp(0.0, 1.0),
                sigma: stored_sigma,
            }
        })
        .collect();
    Ok(VisibilityScan::new(points, wavelength_nm)?)
}
