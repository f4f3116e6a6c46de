//! Analysis toolkit for bright pulsed squeezed-light experiments.
//!
//! The crate models a single-pass waveguide OPA squeezer read out either in
//! balanced homodyne or in direct detection after polarization displacement.
//! It provides:
//!
//! * [`noise_model`] — the loss + phase-noise variance model, loss-budget
//!   algebra, electronic-noise handling, and inversion back to the squeezing
//!   generated in the waveguide.
//! * [`curve_fit`] — joint weighted fits of squeezing/antisqueezing curves
//!   versus pump power in dB space, with parameter covariance and seeded
//!   Monte-Carlo propagation to loss-corrected squeezing levels.
//! * [`polarization`] — Jones calculus for the waveplate displacement chain
//!   and the polarizing-beam-splitter split-ratio/phase solver.
//! * [`modes`] — a scalar finite-difference eigenmode solver for the ridge
//!   waveguide and the spatial overlap between the two polarization modes.
//! * [`pulses`] — Gaussian pulse-duration extraction from interferometric
//!   visibility scans and temporal-overlap metrics.
//! * [`synth`] — seeded synthetic data generators used for regression tests
//!   and end-to-end pipeline checks.
//! * [`io`] — the CSV formats shared by the generators and the CLI.
//!
//! All noise variances are linear and normalized to shot noise = 1; decibels
//! appear only at I/O boundaries.

pub mod curve_fit;
pub mod io;
pub mod modes;
pub mod noise_model;
pub mod polarization;
pub mod pulses;
pub mod synth;

pub use curve_fit::{FitResult, MeasuredCurve, PropagationResult};
pub use modes::{ScalarMode, WaveguideGeometry};
pub use noise_model::{LossBudget, NoiseParams, QuadraturePair};
pub use polarization::{JonesState, Waveplate};
pub use pulses::{PulseFit, VisibilityScan};
pub use synth::SpectrumTrace;
