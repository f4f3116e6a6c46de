//! Assembly of the single JSON analysis report. Every analysis lands in its
//! own section; a failed analysis leaves an error object in place of the
//! section so the rest of the report stays usable.

use std::path::{Path, PathBuf};

use serde::Serialize;

use sqz_core::curve_fit::{
    self, fit_variance_model, propagate_waveguide_squeezing, FitResult, MeasuredCurve,
};
use sqz_core::modes::{self, ScalarMode, WaveguideGeometry};
use sqz_core::noise_model::{
    db_to_lin, generated_db_from_alpha, infer_generated_squeezing, invert_loss_model, lin_to_db,
    subtract_electronic_noise, LossBudget,
};
use sqz_core::polarization::{self, ChainAngles};
use sqz_core::pulses::{fit_pulse, PulseFit, VisibilityScan};
use sqz_core::synth::SpectrumTrace;

use crate::config::Config;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A report section: either the analysis output or an error object.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Section<T: Serialize> {
    Ok(T),
    Err {
        error: String,
    },
    #[serde(serialize_with = "serialize_skipped")]
    Skipped,
}

fn serialize_skipped<S: serde::Serializer>(s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(1))?;
    map.serialize_entry("skipped", &true)?;
    map.end()
}

impl<T: Serialize> Section<T> {
    /// `Ok(None)` marks an analysis whose inputs were not configured; it
    /// lands as `skipped` rather than a failure.
    fn from_result(r: Result<Option<T>, CliError>, failures: &mut Vec<CliError>) -> Self {
        match r {
            Ok(Some(v)) => Section::Ok(v),
            Ok(None) => Section::Skipped,
            Err(e) => {
                let msg = e.to_string();
                failures.push(e);
                Section::Err { error: msg }
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub fnv1a64: String,
}

#[derive(Debug, Serialize)]
pub struct FitSection {
    pub eta_total: f64,
    pub eta_total_sigma: f64,
    pub delta_rad: f64,
    pub delta_sigma_rad: f64,
    pub alpha_per_sqrt_w: f64,
    pub alpha_sigma: f64,
    pub electronic_noise_lin: f64,
    pub electronic_noise_sigma: Option<f64>,
    pub en_fixed: bool,
    pub residual_norm: f64,
    pub iterations: usize,
    pub degenerate: bool,
}

#[derive(Debug, Serialize)]
pub struct EnCorrection {
    pub raw_db: f64,
    pub clearance_db: f64,
    pub corrected_db: f64,
}

#[derive(Debug, Serialize)]
pub struct EnSection {
    pub homodyne: EnCorrection,
    pub direct: Option<EnCorrection>,
    /// Homodyne corrected level pushed through the displacement split,
    /// for comparison against the direct corrected level.
    pub direct_consistency_db: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct InversionPair {
    pub shallow_db: f64,
    pub deep_db: f64,
    pub selected_db: f64,
}

#[derive(Debug, Serialize)]
pub struct MonteCarloSection {
    pub central_db: f64,
    pub upper_err_db: f64,
    pub lower_err_db: f64,
    pub n_samples: usize,
    pub n_rejected: usize,
    pub n_floor_clamped: usize,
}

#[derive(Debug, Serialize)]
pub struct GeneratedSection {
    pub pump_mw: f64,
    pub from_alpha_db: f64,
    pub inversion: InversionPair,
    pub monte_carlo: MonteCarloSection,
}

#[derive(Debug, Serialize)]
pub struct BudgetSection {
    pub entries: Vec<(String, f64)>,
    pub total_labels: Vec<String>,
    pub eta_total_composed: f64,
    pub eta_total_fit: Option<f64>,
    /// Fit efficiency divided by the named non-waveguide factors.
    pub eta_wg_inferred: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ProjectionSection {
    pub generated_db_used: f64,
    pub srs_labels: Vec<String>,
    pub srs_db: f64,
    pub on_chip_labels: Vec<String>,
    pub on_chip_db: f64,
}

#[derive(Debug, Serialize)]
pub struct ChainSolution {
    pub wp1_deg: f64,
    pub wp2_deg: f64,
    pub wp3_deg: f64,
    pub achieved_split: f64,
}

#[derive(Debug, Serialize)]
pub struct PolarizationSection {
    pub bright: ChainSolution,
    pub homodyne: ChainSolution,
    /// Corrected homodyne level after the 90/10 displacement, dB; absent
    /// when no homodyne reading was configured.
    pub displaced_db: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ModeSummary {
    pub core_index: f64,
    pub n_eff: f64,
    pub residual: f64,
    pub peak_cell: (usize, usize),
}

#[derive(Debug, Serialize)]
pub struct ConvergenceRowOut {
    pub h_um: f64,
    pub n_eff_ordinary: f64,
    pub n_eff_extraordinary: f64,
    pub overlap: f64,
}

#[derive(Debug, Serialize)]
pub struct ModesSection {
    pub geometry_note: &'static str,
    pub ridge_width_um: f64,
    pub ridge_height_um: f64,
    pub slab_height_um: f64,
    pub substrate_index: f64,
    pub cover_index: f64,
    pub wavelength_um: f64,
    pub ordinary: ModeSummary,
    pub extraordinary: ModeSummary,
    pub spatial_overlap: f64,
    pub convergence: Option<Vec<ConvergenceRowOut>>,
    pub convergence_order: Option<f64>,
    /// False warns that the n_eff refinement differences did not shrink
    /// monotonically (common near ridge-corner singularities).
    pub convergence_monotone: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct PulseSummary {
    pub wavelength_nm: u32,
    pub tau_fwhm_ps: f64,
    pub tau_sigma_ps: f64,
    pub amplitude: f64,
    pub center_ps: f64,
}

#[derive(Debug, Serialize)]
pub struct PulsesSection {
    pub lo: PulseSummary,
    pub pump: Option<PulseSummary>,
    pub temporal_overlap: Option<f64>,
    pub ideal_pump_ratio: Option<f64>,
    /// spatial × temporal, present when the modes section also ran.
    pub combined_overlap: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub timestamp_unix: u64,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub fit: Section<FitSection>,
    pub electronic_noise: Section<EnSection>,
    pub generated: Section<GeneratedSection>,
    pub loss_budget: Section<BudgetSection>,
    pub projections: Section<ProjectionSection>,
    pub polarization: Section<PolarizationSection>,
    pub modes: Section<ModesSection>,
    pub pulses: Section<PulsesSection>,
}

/// Everything the plot emitter needs beyond the JSON document.
#[derive(Default)]
pub struct Artifacts {
    pub curve: Option<(MeasuredCurve, FitResult)>,
    pub spectra: Vec<SpectrumTrace>,
    pub scans: Vec<(VisibilityScan, PulseFit)>,
    pub mode_ordinary: Option<ScalarMode>,
    pub mode_extraordinary: Option<ScalarMode>,
}

pub fn fnv1a64(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

fn digest_file(path: &Path) -> Result<InputDigest, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        fnv1a64: fnv1a64(&bytes),
    })
}

fn budget_from_config(config: &Config) -> Result<LossBudget, CliError> {
    let entries = config.section("budget");
    let mut budget = LossBudget::new();
    for (label, value) in &entries {
        if label == "total_labels" {
            continue;
        }
        let eta: f64 = value.parse().map_err(|_| {
            CliError::Validation(format!("budget.{label}: `{value}` is not a number"))
        })?;
        budget
            .push(label, eta)
            .map_err(|e| CliError::Validation(format!("budget.{label}: {e}")))?;
    }
    Ok(budget)
}

fn labels_from_config(config: &Config, key: &str, default: &[&str]) -> Vec<String> {
    match config.get(key) {
        Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
        None => default.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn geometry_from_config(config: &Config) -> Result<WaveguideGeometry, CliError> {
    let mut geom = WaveguideGeometry::default_ridge();
    if let Some(v) = config.get_f64("modes.ridge_width_um")? {
        geom.ridge_width_um = v;
    }
    if let Some(v) = config.get_f64("modes.ridge_height_um")? {
        geom.ridge_height_um = v;
    }
    if let Some(v) = config.get_f64("modes.slab_height_um")? {
        geom.slab_height_um = v;
    }
    if let Some(v) = config.get_f64("modes.substrate_depth_um")? {
        geom.substrate_depth_um = v;
    }
    if let Some(v) = config.get_f64("modes.substrate_index")? {
        geom.substrate_index = v;
    }
    if let Some(v) = config.get_f64("modes.cover_index")? {
        geom.cover_index = v;
    }
    if let Some(v) = config.get_f64("modes.wavelength_um")? {
        geom.wavelength_um = v;
    }
    if let Some(v) = config.get_f64("modes.dx_um")? {
        let width = geom.grid.width_um();
        let height = geom.grid.height_um();
        geom.grid.dx_um = v;
        geom.grid.dy_um = v;
        geom.grid.nx = (width / v).round() as usize - 1;
        geom.grid.ny = (height / v).round() as usize - 1;
    }
    Ok(geom)
}

struct FitOutcome {
    fit: FitResult,
    curve: MeasuredCurve,
    en_fixed: bool,
}

fn run_fit(config: &Config, inputs: &mut Vec<InputDigest>) -> Result<Option<FitOutcome>, CliError> {
    let Some(path) = config.get_path("curve.path") else {
        return Ok(None);
    };
    inputs.push(digest_file(&path)?);
    let curve = sqz_core::io::read_curve(&path)?;
    let fit_en_free = matches!(config.get("curve.fit_en"), Some("free"));
    let fixed_en = if fit_en_free {
        None
    } else {
        let clearance = config.get_f64("curve.clearance_db")?.ok_or_else(|| {
            CliError::Usage("config needs curve.clearance_db (or curve.fit_en = free)".into())
        })?;
        Some(db_to_lin(-clearance).map_err(CliError::from)?)
    };
    let fit = fit_variance_model(&curve, fixed_en)?;
    Ok(Some(FitOutcome {
        fit,
        curve,
        en_fixed: !fit_en_free,
    }))
}

fn fit_section(outcome: &FitOutcome) -> FitSection {
    let f = &outcome.fit;
    FitSection {
        eta_total: f.params.eta_total,
        eta_total_sigma: f.sigma_eta,
        delta_rad: f.params.delta,
        delta_sigma_rad: f.sigma_delta,
        alpha_per_sqrt_w: f.params.alpha,
        alpha_sigma: f.sigma_alpha,
        electronic_noise_lin: f.params.electronic_noise,
        electronic_noise_sigma: f.sigma_en,
        en_fixed: outcome.en_fixed,
        residual_norm: f.residual_norm,
        iterations: f.iterations,
        degenerate: f.degenerate,
    }
}

pub fn run_report(config: &Config, seed: u64) -> (Report, Artifacts, Vec<CliError>) {
    let mut failures = Vec::new();
    let mut inputs = Vec::new();
    let mut artifacts = Artifacts::default();

    // Curve fit. A config without curve.path skips the section; a configured
    // path that fails to load or fit is a reported failure.
    let (fit_section_out, fit_outcome) = match run_fit(config, &mut inputs) {
        Ok(None) => (Section::Skipped, None),
        Ok(Some(outcome)) => (Section::Ok(fit_section(&outcome)), Some(outcome)),
        Err(e) => {
            let msg = e.to_string();
            failures.push(e);
            (Section::Err { error: msg }, None)
        }
    };
    let fit_failed = matches!(fit_section_out, Section::Err { .. });

    // Electronic-noise corrections.
    let homodyne_raw = config.get_f64("homodyne.v_meas_db").ok().flatten();
    let homodyne_clearance = config.get_f64("curve.clearance_db").ok().flatten();
    let en_result: Result<Option<EnSection>, CliError> = (|| {
        let Some(raw) = homodyne_raw else {
            return Ok(None);
        };
        let clearance = homodyne_clearance
            .ok_or_else(|| CliError::Usage("config is missing curve.clearance_db".into()))?;
        let corrected = subtract_electronic_noise(raw, clearance)?;
        let mut direct = None;
        let mut direct_consistency_db = None;
        if let Some(d_raw) = config.get_f64("direct.v_meas_db")? {
            let d_clear = config
                .get_f64("direct.clearance_db")?
                .ok_or_else(|| CliError::Usage("config is missing direct.clearance_db".into()))?;
            direct = Some(EnCorrection {
                raw_db: d_raw,
                clearance_db: d_clear,
                corrected_db: subtract_electronic_noise(d_raw, d_clear)?,
            });
            let split = config.get_f64("direct.split")?.unwrap_or(0.9);
            let displaced = polarization::displaced_variance(db_to_lin(corrected)?, split)?;
            direct_consistency_db = Some(lin_to_db(displaced)?);
        }
        Ok(Some(EnSection {
            homodyne: EnCorrection {
                raw_db: raw,
                clearance_db: clearance,
                corrected_db: corrected,
            },
            direct,
            direct_consistency_db,
        }))
    })();
    let corrected_homodyne_db = match &en_result {
        Ok(Some(s)) => Some(s.homodyne.corrected_db),
        _ => None,
    };
    let en_failed = en_result.is_err();
    let en_section = Section::from_result(en_result, &mut failures);

    // Generated squeezing: deterministic routes plus Monte-Carlo.
    let generated_result: Result<Option<GeneratedSection>, CliError> = (|| {
        let outcome = match (&fit_outcome, fit_failed) {
            (Some(outcome), _) => outcome,
            (None, true) => {
                return Err(CliError::Validation(
                    "requires the curve fit, which failed".into(),
                ))
            }
            (None, false) => return Ok(None),
        };
        let corrected = match (corrected_homodyne_db, en_failed) {
            (Some(c), _) => c,
            (None, true) => {
                return Err(CliError::Validation(
                    "requires the electronic-noise correction, which failed".into(),
                ))
            }
            (None, false) => return Ok(None),
        };
        let pump_mw = config.get_f64("homodyne.pump_mw")?.unwrap_or(20.0);
        let pump_w = pump_mw * 1e-3;
        let fit = &outcome.fit;
        let from_alpha_db = generated_db_from_alpha(fit.params.alpha, pump_w)?;
        let (deep, shallow) = invert_loss_model(
            db_to_lin(corrected)?,
            fit.params.eta_total,
            fit.params.delta,
        )?;
        let v_plus_corrected = match config.get_f64("homodyne.v_plus_db")? {
            Some(vp) => Some(subtract_electronic_noise(
                vp,
                homodyne_clearance.unwrap_or(13.2),
            )?),
            None => None,
        };
        let selected_db = infer_generated_squeezing(
            corrected,
            fit.params.eta_total,
            fit.params.delta,
            v_plus_corrected,
        )?;
        let samples = config.get_u64("mc.samples")?.unwrap_or(100_000) as usize;
        let sigma_db = config.get_f64("homodyne.v_sigma_db")?.unwrap_or(0.05);
        // Stated experiment uncertainties may exceed what a clean fit on the
        // bundled data reports; the config can widen the propagated sigmas.
        let mut mc_fit = fit.clone();
        if let Some(s) = config.get_f64("mc.eta_sigma")? {
            mc_fit.sigma_eta = s;
        }
        if let Some(s) = config.get_f64("mc.delta_sigma")? {
            mc_fit.sigma_delta = s;
        }
        let mc = propagate_waveguide_squeezing(&mc_fit, corrected, sigma_db, samples, seed)?;
        Ok(Some(GeneratedSection {
            pump_mw,
            from_alpha_db,
            inversion: InversionPair {
                shallow_db: lin_to_db(shallow)?,
                deep_db: lin_to_db(deep)?,
                selected_db,
            },
            monte_carlo: MonteCarloSection {
                central_db: mc.central_db,
                upper_err_db: mc.upper_err_db,
                lower_err_db: mc.lower_err_db,
                n_samples: mc.n_samples,
                n_rejected: mc.n_rejected,
                n_floor_clamped: mc.n_floor_clamped,
            },
        }))
    })();
    let from_alpha_db = match &generated_result {
        Ok(Some(g)) => Some(g.from_alpha_db),
        _ => None,
    };
    let generated_failed = generated_result.is_err();
    let generated_section = Section::from_result(generated_result, &mut failures);

    // Loss budget.
    let budget = budget_from_config(config);
    let budget_result: Result<Option<BudgetSection>, CliError> = (|| {
        let budget = budget
            .as_ref()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        if budget.is_empty() {
            return Ok(None);
        }
        let total_labels = labels_from_config(
            config,
            "budget.total_labels",
            &["wg", "prop", "overlap", "det"],
        );
        let label_refs: Vec<&str> = total_labels.iter().map(String::as_str).collect();
        let eta_total_composed = budget.compose_subset(&label_refs).map_err(|_| {
            CliError::Validation(format!(
                "budget.total_labels names an unknown entry: {total_labels:?}"
            ))
        })?;
        let eta_total_fit = fit_outcome.as_ref().map(|o| o.fit.params.eta_total);
        let eta_wg_inferred = eta_total_fit.and_then(|eta_fit| {
            let non_wg: Vec<&str> = label_refs.iter().cloned().filter(|l| *l != "wg").collect();
            budget
                .compose_subset(&non_wg)
                .ok()
                .map(|rest| eta_fit / rest)
        });
        Ok(Some(BudgetSection {
            entries: budget.entries().to_vec(),
            total_labels,
            eta_total_composed,
            eta_total_fit,
            eta_wg_inferred,
        }))
    })();
    let budget_available = matches!(&budget_result, Ok(Some(_)));
    let budget_failed = budget_result.is_err();
    let budget_section = Section::from_result(budget_result, &mut failures);

    // Application projections.
    let projections_result: Result<Option<ProjectionSection>, CliError> = (|| {
        if !budget_available {
            return if budget_failed {
                Err(CliError::Validation(
                    "requires the loss budget, which failed".into(),
                ))
            } else {
                Ok(None)
            };
        }
        let budget = budget.as_ref().expect("budget_available checked");
        let generated = match (from_alpha_db, generated_failed) {
            (Some(g), _) => g,
            (None, true) => {
                return Err(CliError::Validation(
                    "requires the generated section, which failed".into(),
                ))
            }
            (None, false) => return Ok(None),
        };
        let srs_labels = labels_from_config(config, "projections.srs_labels", &["wg", "direct"]);
        let chip_labels = labels_from_config(config, "projections.on_chip_labels", &["wg"]);
        let srs_refs: Vec<&str> = srs_labels.iter().map(String::as_str).collect();
        let chip_refs: Vec<&str> = chip_labels.iter().map(String::as_str).collect();
        let srs_db = curve_fit::project_application_squeezing(generated, budget, &srs_refs)?;
        let on_chip_db = curve_fit::project_application_squeezing(generated, budget, &chip_refs)?;
        Ok(Some(ProjectionSection {
            generated_db_used: generated,
            srs_labels,
            srs_db,
            on_chip_labels: chip_labels,
            on_chip_db,
        }))
    })();
    let projections_section = Section::from_result(projections_result, &mut failures);

    // Polarization chain solutions. Self-contained up to the displaced-level
    // check, which needs the corrected homodyne reading.
    let polarization_result: Result<Option<PolarizationSection>, CliError> = (|| {
        let bright_split = config.get_f64("polarization.bright_split")?.unwrap_or(0.9);
        let homodyne_split = config
            .get_f64("polarization.homodyne_split")?
            .unwrap_or(0.5);
        let solve = |split: f64| -> Result<ChainSolution, CliError> {
            let angles: ChainAngles = polarization::solve_chain_angles(split, 0.0)?;
            Ok(ChainSolution {
                wp1_deg: angles.wp1.to_degrees(),
                wp2_deg: angles.wp2.to_degrees(),
                wp3_deg: angles.wp3.to_degrees(),
                achieved_split: polarization::squeezed_split(&angles),
            })
        };
        let displaced_db = match corrected_homodyne_db {
            Some(corrected) => Some(lin_to_db(polarization::displaced_variance(
                db_to_lin(corrected)?,
                bright_split,
            )?)?),
            None => None,
        };
        Ok(Some(PolarizationSection {
            bright: solve(bright_split)?,
            homodyne: solve(homodyne_split)?,
            displaced_db,
        }))
    })();
    let polarization_section = Section::from_result(polarization_result, &mut failures);

    // Waveguide modes.
    let modes_enabled = config
        .get_bool("modes.enabled")
        .ok()
        .flatten()
        .unwrap_or(true);
    let modes_section = if modes_enabled {
        let modes_result: Result<Option<ModesSection>, CliError> = (|| {
            let geom = geometry_from_config(config)?;
            let ordinary = modes::solve_fundamental(&geom)?;
            let extraordinary =
                modes::solve_fundamental(&geom.with_core_index(modes::N_EXTRAORDINARY))?;
            let spatial_overlap = modes::mode_overlap(&ordinary, &extraordinary)?;
            let run_convergence = config
                .get_bool("modes.convergence")
                .ok()
                .flatten()
                .unwrap_or(false);
            let (convergence, convergence_order, convergence_monotone) = if run_convergence {
                let mut coarse = geom.clone();
                coarse.grid.nx = (geom.grid.nx + 1) / 2 - 1;
                coarse.grid.ny = (geom.grid.ny + 1) / 2 - 1;
                coarse.grid.dx_um = geom.grid.dx_um * 2.0;
                coarse.grid.dy_um = geom.grid.dy_um * 2.0;
                let study = modes::convergence_study(&coarse, modes::N_EXTRAORDINARY, 3)?;
                let rows = study
                    .rows
                    .iter()
                    .map(|r| ConvergenceRowOut {
                        h_um: r.h_um,
                        n_eff_ordinary: r.n_eff_a,
                        n_eff_extraordinary: r.n_eff_b,
                        overlap: r.overlap,
                    })
                    .collect();
                (Some(rows), study.observed_order, Some(study.monotone))
            } else {
                (None, None, None)
            };
            let summary = |mode: &ScalarMode, core: f64| ModeSummary {
                core_index: core,
                n_eff: mode.n_eff,
                residual: mode.residual,
                peak_cell: mode.peak_cell(),
            };
            let section = ModesSection {
                geometry_note:
                    "ridge cross-section is an assumed default, frozen for reproducibility",
                ridge_width_um: geom.ridge_width_um,
                ridge_height_um: geom.ridge_height_um,
                slab_height_um: geom.slab_height_um,
                substrate_index: geom.substrate_index,
                cover_index: geom.cover_index,
                wavelength_um: geom.wavelength_um,
                ordinary: summary(&ordinary, geom.core_index),
                extraordinary: summary(&extraordinary, modes::N_EXTRAORDINARY),
                spatial_overlap,
                convergence,
                convergence_order,
                convergence_monotone,
            };
            artifacts.mode_ordinary = Some(ordinary);
            artifacts.mode_extraordinary = Some(extraordinary);
            Ok(Some(section))
        })();
        Section::from_result(modes_result, &mut failures)
    } else {
        Section::Skipped
    };
    let spatial_overlap = match &modes_section {
        Section::Ok(m) => Some(m.spatial_overlap),
        _ => None,
    };

    // Pulse durations and temporal overlap.
    let pulses_result: Result<Option<PulsesSection>, CliError> = (|| {
        let Some(lo_path) = config.get_path("pulses.lo_path") else {
            return Ok(None);
        };
        inputs.push(digest_file(&lo_path)?);
        let lo_scan = sqz_core::io::read_visibility(&lo_path)?;
        let lo_fit = fit_pulse(&lo_scan)?;
        let lo = PulseSummary {
            wavelength_nm: lo_scan.wavelength_nm,
            tau_fwhm_ps: lo_fit.tau_fwhm_ps,
            tau_sigma_ps: lo_fit.tau_sigma_ps,
            amplitude: lo_fit.amplitude,
            center_ps: lo_fit.center_ps,
        };
        artifacts.scans.push((lo_scan, lo_fit));
        let mut pump = None;
        let mut temporal = None;
        let mut ratio = None;
        if let Some(pump_path) = config.get_path("pulses.pump_path") {
            inputs.push(digest_file(&pump_path)?);
            let pump_scan = sqz_core::io::read_visibility(&pump_path)?;
            let pump_fit = fit_pulse(&pump_scan)?;
            pump = Some(PulseSummary {
                wavelength_nm: pump_scan.wavelength_nm,
                tau_fwhm_ps: pump_fit.tau_fwhm_ps,
                tau_sigma_ps: pump_fit.tau_sigma_ps,
                amplitude: pump_fit.amplitude,
                center_ps: pump_fit.center_ps,
            });
            temporal = Some(sqz_core::pulses::temporal_overlap(
                lo_fit.tau_fwhm_ps,
                pump_fit.tau_fwhm_ps,
            )?);
            ratio = Some(sqz_core::pulses::ideal_pump_ratio(
                lo_fit.tau_fwhm_ps,
                pump_fit.tau_fwhm_ps,
            )?);
            artifacts.scans.push((pump_scan, pump_fit));
        }
        let combined = match (spatial_overlap, temporal) {
            (Some(s), Some(t)) => Some(s * t),
            _ => None,
        };
        Ok(Some(PulsesSection {
            lo,
            pump,
            temporal_overlap: temporal,
            ideal_pump_ratio: ratio,
            combined_overlap: combined,
        }))
    })();
    let pulses_section = Section::from_result(pulses_result, &mut failures);

    // Optional spectra for the plot panel.
    if let Some(dir) = config.get_path("spectra.dir") {
        for label in ["squeezed", "antisqueezed", "shot", "electronic"] {
            let path = dir.join(format!("spectrum_{label}.csv"));
            if path.exists() {
                if let Ok(trace) = sqz_core::io::read_spectrum(&path) {
                    if let Ok(digest) = digest_file(&path) {
                        inputs.push(digest);
                    }
                    artifacts.spectra.push(trace);
                }
            }
        }
    }

    if let Some(outcome) = fit_outcome {
        artifacts.curve = Some((outcome.curve, outcome.fit));
    }

    let timestamp_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        timestamp_unix,
        seed,
        inputs,
        fit: fit_section_out,
        electronic_noise: en_section,
        generated: generated_section,
        loss_budget: budget_section,
        projections: projections_section,
        polarization: polarization_section,
        modes: modes_section,
        pulses: pulses_section,
    };
    (report, artifacts, failures)
}

/// Writes the report and every plot the artifacts support into `out_dir`.
pub fn write_outputs(
    report: &Report,
    artifacts: &Artifacts,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let report_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Validation(format!("report serialization: {e}")))?;
    std::fs::write(&report_path, json + "\n")?;
    written.push(report_path);

    if let Some((curve, fit)) = &artifacts.curve {
        let svg = crate::plots::fit_curve_plot(curve, &fit.params);
        let path = out_dir.join("fit_curve.svg");
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    if !artifacts.spectra.is_empty() {
        let svg = crate::plots::spectra_plot(&artifacts.spectra);
        let path = out_dir.join("spectra.svg");
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    if !artifacts.scans.is_empty() {
        let refs: Vec<(&VisibilityScan, &PulseFit)> =
            artifacts.scans.iter().map(|(s, f)| (s, f)).collect();
        let svg = crate::plots::visibility_plot(&refs);
        let path = out_dir.join("visibility.svg");
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    for (mode, name) in [
        (&artifacts.mode_ordinary, "mode_ordinary.svg"),
        (&artifacts.mode_extraordinary, "mode_extraordinary.svg"),
    ] {
        if let Some(mode) = mode {
            let title = if name.contains("ordinary") && !name.contains("extra") {
                "fundamental mode, ordinary axis"
            } else {
                "fundamental mode, extraordinary axis"
            };
            let svg = crate::plots::mode_heatmap(mode, title);
            let path = out_dir.join(name);
            std::fs::write(&path, svg)?;
            written.push(path);
        }
    }
    Ok(written)
}
