//! `sqz` — analysis front end for bright pulsed squeezed-light measurements.

mod config;
mod error;
mod plots;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;
use error::CliError;
use sqz_core::curve_fit::{fit_variance_model, propagate_waveguide_squeezing, FitResult};
use sqz_core::modes;
use sqz_core::noise_model::{
    db_to_lin, generated_db_from_alpha, infer_generated_squeezing, lin_to_db, NoiseParams,
};
use sqz_core::pulses::{fit_pulse, ideal_pump_ratio, temporal_overlap};
use sqz_core::synth;

const DEFAULT_SEED: u64 = 20260101;

#[derive(Parser)]
#[command(
    name = "sqz",
    version,
    about = "Squeezed-light measurement modeling: variance-model fits, loss-budget inversion, waveguide modes, pulse overlap",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the squeezing/antisqueezing curve to the loss + phase-noise model.
    Fit(FitArgs),
    /// Invert a measured squeezing level to the level generated in the waveguide.
    Infer(InferArgs),
    /// Temporal and combined mode-overlap numbers from pulse durations.
    Overlap(OverlapArgs),
    /// Solve the waveguide fundamental modes and their spatial overlap.
    Modes(ModesArgs),
    /// Fit pulse durations from interferometric visibility scans.
    Pulses(PulsesArgs),
    /// Generate seeded synthetic datasets (curve, spectra, visibility).
    Simulate(SimulateArgs),
    /// Run every analysis in the config and write the JSON report and plots.
    Report(ReportArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Curve CSV: pump_mw,sqz_db,antisqz_db,sigma_sqz_db,sigma_antisqz_db
    #[arg(long)]
    curve: PathBuf,
    /// Electronic-noise clearance in dB; fixes EN during the fit.
    #[arg(long, conflicts_with = "fit_en")]
    clearance_db: Option<f64>,
    /// Float the electronic noise as a fourth fit parameter.
    #[arg(long)]
    fit_en: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    /// Measured squeezing level (EN-subtracted), dB.
    #[arg(long, allow_hyphen_values = true)]
    v_meas_db: f64,
    #[arg(long, default_value_t = 0.05)]
    v_sigma_db: f64,
    /// Detection efficiency.
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    eta_sigma: f64,
    /// Phase-noise angle, rad.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    delta_sigma: f64,
    /// Measured antisqueezing level for root selection, dB.
    #[arg(long, allow_hyphen_values = true)]
    v_plus_db: Option<f64>,
    /// Monte-Carlo sample count (0 skips the Monte-Carlo step).
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Pump-coupling coefficient for the deterministic route, W^(-1/2).
    #[arg(long)]
    alpha: Option<f64>,
    /// Pump power for the deterministic route, mW.
    #[arg(long)]
    pump_mw: Option<f64>,
}

#[derive(Args)]
struct OverlapArgs {
    /// LO pulse duration (intensity FWHM), ps.
    #[arg(long)]
    tau_lo: f64,
    /// Pump pulse duration (intensity FWHM), ps.
    #[arg(long)]
    tau_pump: f64,
    /// Spatial overlap to fold into the combined number.
    #[arg(long)]
    spatial: Option<f64>,
}

#[derive(Args)]
struct ModesArgs {
    /// Config file with modes.* geometry overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also run the 3-level grid-refinement study.
    #[arg(long)]
    convergence: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PulsesArgs {
    /// Visibility CSV for the LO (1064 nm) scan.
    #[arg(long)]
    lo: PathBuf,
    /// Visibility CSV for the pump (532 nm) scan.
    #[arg(long)]
    pump: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// What to generate: all, curve, spectra, or visibility.
    #[arg(long, default_value = "all")]
    what: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Per-point noise on the curve, dB.
    #[arg(long, default_value_t = 0.05)]
    sigma_db: f64,
    /// Per-point jitter on the spectra, dB.
    #[arg(long, default_value_t = 0.15)]
    trace_noise_db: f64,
}

#[derive(Args)]
struct ReportArgs {
    /// Flat `section.key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Override mc.seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Infer(args) => cmd_infer(args),
        Command::Overlap(args) => cmd_overlap(args),
        Command::Modes(args) => cmd_modes(args),
        Command::Pulses(args) => cmd_pulses(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("serialization: {e}")))?;
    println!("{text}");
    Ok(())
}

fn fit_to_json(fit: &FitResult, en_fixed: bool) -> serde_json::Value {
    serde_json::json!({
        "eta_total": fit.params.eta_total,
        "eta_total_sigma": fit.sigma_eta,
        "delta_rad": fit.params.delta,
        "delta_sigma_rad": fit.sigma_delta,
        "alpha_per_sqrt_w": fit.params.alpha,
        "alpha_sigma": fit.sigma_alpha,
        "electronic_noise_lin": fit.params.electronic_noise,
        "en_fixed": en_fixed,
        "residual_norm": fit.residual_norm,
        "iterations": fit.iterations,
        "degenerate": fit.degenerate,
    })
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let curve = sqz_core::io::read_curve(&args.curve)?;
    let fixed_en = match (args.clearance_db, args.fit_en) {
        (Some(c), false) => Some(db_to_lin(-c)?),
        (None, true) => None,
        (None, false) => {
            return Err(CliError::Usage(
                "pass --clearance-db <dB> to fix the electronic noise, or --fit-en to float it"
                    .into(),
            ))
        }
        (Some(_), true) => unreachable!("clap conflicts_with"),
    };
    let fit = fit_variance_model(&curve, fixed_en)?;
    print_json(&fit_to_json(&fit, fixed_en.is_some()))?;
    if let Some(out) = args.out {
        std::fs::create_dir_all(&out)?;
        let svg = plots::fit_curve_plot(&curve, &fit.params);
        std::fs::write(out.join("fit_curve.svg"), svg)?;
    }
    Ok(())
}

fn cmd_infer(args: InferArgs) -> Result<(), CliError> {
    if !(args.eta > 0.0 && args.eta <= 1.0) {
        return Err(CliError::Usage(format!(
            "--eta must lie in (0, 1], got {}",
            args.eta
        )));
    }
    let v = db_to_lin(args.v_meas_db)?;
    let (deep, shallow) = sqz_core::noise_model::invert_loss_model(v, args.eta, args.delta)?;
    let selected = infer_generated_squeezing(args.v_meas_db, args.eta, args.delta, args.v_plus_db)?;
    let from_alpha = match (args.alpha, args.pump_mw) {
        (Some(alpha), Some(pump_mw)) => Some(generated_db_from_alpha(alpha, pump_mw * 1e-3)?),
        (None, None) => None,
        _ => return Err(CliError::Usage("--alpha and --pump-mw go together".into())),
    };
    let mc = if args.samples > 0 {
        let params = NoiseParams::new(args.eta, args.delta.abs(), 1.0, 0.0)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let fit = FitResult::from_parts(params, args.eta_sigma, args.delta_sigma);
        let out = propagate_waveguide_squeezing(
            &fit,
            args.v_meas_db,
            args.v_sigma_db,
            args.samples,
            args.seed,
        )?;
        Some(out)
    } else {
        None
    };
    print_json(&serde_json::json!({
        "v_meas_db": args.v_meas_db,
        "inversion": {
            "shallow_db": lin_to_db(shallow)?,
            "deep_db": lin_to_db(deep)?,
            "selected_db": selected,
        },
        "from_alpha_db": from_alpha,
        "monte_carlo": mc.map(|m| serde_json::json!({
            "central_db": m.central_db,
            "upper_err_db": m.upper_err_db,
            "lower_err_db": m.lower_err_db,
            "n_samples": m.n_samples,
            "n_rejected": m.n_rejected,
            "n_floor_clamped": m.n_floor_clamped,
            "seed": args.seed,
        })),
    }))
}

fn cmd_overlap(args: OverlapArgs) -> Result<(), CliError> {
    let temporal = temporal_overlap(args.tau_lo, args.tau_pump)?;
    let ratio = ideal_pump_ratio(args.tau_lo, args.tau_pump)?;
    print_json(&serde_json::json!({
        "tau_lo_ps": args.tau_lo,
        "tau_pump_ps": args.tau_pump,
        "temporal_overlap": temporal,
        "ideal_pump_ratio": ratio,
        "spatial_overlap": args.spatial,
        "combined_overlap": args.spatial.map(|s| s * temporal),
    }))
}

fn cmd_modes(args: ModesArgs) -> Result<(), CliError> {
    let config = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let geom = report::geometry_from_config(&config)?;
    let ordinary = modes::solve_fundamental(&geom)?;
    let extraordinary = modes::solve_fundamental(&geom.with_core_index(modes::N_EXTRAORDINARY))?;
    let overlap = modes::mode_overlap(&ordinary, &extraordinary)?;
    let study = if args.convergence {
        let mut coarse = geom.clone();
        coarse.grid.nx = (geom.grid.nx + 1) / 2 - 1;
        coarse.grid.ny = (geom.grid.ny + 1) / 2 - 1;
        coarse.grid.dx_um = geom.grid.dx_um * 2.0;
        coarse.grid.dy_um = geom.grid.dy_um * 2.0;
        Some(modes::convergence_study(
            &coarse,
            modes::N_EXTRAORDINARY,
            3,
        )?)
    } else {
        None
    };
    print_json(&serde_json::json!({
        "n_eff_ordinary": ordinary.n_eff,
        "n_eff_extraordinary": extraordinary.n_eff,
        "spatial_overlap": overlap,
        "residuals": [ordinary.residual, extraordinary.residual],
        "convergence": study.as_ref().map(|s| serde_json::json!({
            "rows": s.rows.iter().map(|r| serde_json::json!({
                "h_um": r.h_um,
                "n_eff_ordinary": r.n_eff_a,
                "n_eff_extraordinary": r.n_eff_b,
                "overlap": r.overlap,
            })).collect::<Vec<_>>(),
            "observed_order": s.observed_order,
            "monotone": s.monotone,
        })),
    }))?;
    if let Some(out) = args.out {
        std::fs::create_dir_all(&out)?;
        std::fs::write(
            out.join("mode_ordinary.svg"),
            plots::mode_heatmap(&ordinary, "fundamental mode, ordinary axis"),
        )?;
        std::fs::write(
            out.join("mode_extraordinary.svg"),
            plots::mode_heatmap(&extraordinary, "fundamental mode, extraordinary axis"),
        )?;
        std::fs::write(out.join("mode_ordinary.txt"), grid_dump(&ordinary))?;
        std::fs::write(
            out.join("mode_extraordinary.txt"),
            grid_dump(&extraordinary),
        )?;
    }
    Ok(())
}

/// Plain-text field dump: metadata comments, then ny rows of nx values with
/// y increasing downward in file order.
fn grid_dump(mode: &sqz_core::modes::ScalarMode) -> String {
    use std::fmt::Write as _;
    let g = &mode.grid;
    let mut out = String::new();
    let _ = writeln!(out, "# nx = {}", g.nx);
    let _ = writeln!(out, "# ny = {}", g.ny);
    let _ = writeln!(out, "# dx_um = {}", g.dx_um);
    let _ = writeln!(out, "# dy_um = {}", g.dy_um);
    let _ = writeln!(out, "# n_eff = {}", mode.n_eff);
    for j in 0..g.ny {
        let row: Vec<String> = (0..g.nx)
            .map(|i| format!("{:.6e}", mode.field[j * g.nx + i]))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

fn cmd_pulses(args: PulsesArgs) -> Result<(), CliError> {
    let lo_scan = sqz_core::io::read_visibility(&args.lo)?;
    let lo_fit = fit_pulse(&lo_scan)?;
    let mut scans = vec![(lo_scan, lo_fit)];
    let mut pump_json = None;
    let mut overlap_json = None;
    if let Some(pump_path) = &args.pump {
        let pump_scan = sqz_core::io::read_visibility(pump_path)?;
        let pump_fit = fit_pulse(&pump_scan)?;
        overlap_json = Some(serde_json::json!({
            "temporal_overlap": temporal_overlap(lo_fit.tau_fwhm_ps, pump_fit.tau_fwhm_ps)?,
            "ideal_pump_ratio": ideal_pump_ratio(lo_fit.tau_fwhm_ps, pump_fit.tau_fwhm_ps)?,
        }));
        pump_json = Some(serde_json::json!({
            "wavelength_nm": pump_scan.wavelength_nm,
            "tau_fwhm_ps": pump_fit.tau_fwhm_ps,
            "tau_sigma_ps": pump_fit.tau_sigma_ps,
            "amplitude": pump_fit.amplitude,
            "center_ps": pump_fit.center_ps,
        }));
        scans.push((pump_scan, pump_fit));
    }
    print_json(&serde_json::json!({
        "lo": {
            "wavelength_nm": scans[0].0.wavelength_nm,
            "tau_fwhm_ps": scans[0].1.tau_fwhm_ps,
            "tau_sigma_ps": scans[0].1.tau_sigma_ps,
            "amplitude": scans[0].1.amplitude,
            "center_ps": scans[0].1.center_ps,
        },
        "pump": pump_json,
        "overlap": overlap_json,
    }))?;
    if let Some(out) = args.out {
        std::fs::create_dir_all(&out)?;
        let refs: Vec<(
            &sqz_core::pulses::VisibilityScan,
            &sqz_core::pulses::PulseFit,
        )> = scans.iter().map(|(s, f)| (s, f)).collect();
        std::fs::write(out.join("visibility.svg"), plots::visibility_plot(&refs))?;
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(&args.out)?;
    let params = NoiseParams::new(0.61, 0.012, 12.4, db_to_lin(-13.2)?)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let mut written = Vec::new();
    let what = args.what.as_str();
    if !matches!(what, "all" | "curve" | "spectra" | "visibility") {
        return Err(CliError::Usage(format!(
            "--what must be all|curve|spectra|visibility, got `{what}`"
        )));
    }
    if matches!(what, "all" | "curve") {
        let powers_w: Vec<f64> = [2.0, 4.0, 7.0, 10.0, 14.0, 20.0, 28.0, 34.0, 40.0]
            .iter()
            .map(|mw| mw * 1e-3)
            .collect();
        let curve = synth::gen_curve(&params, &powers_w, args.sigma_db, args.seed)?;
        let path = args.out.join("homodyne_squeezing_vs_power.csv");
        sqz_core::io::write_curve(&path, &curve)?;
        written.push(path);
    }
    if matches!(what, "all" | "spectra") {
        let traces = synth::gen_spectrum(
            &synth::SpectrumLevels {
                squeezed_db: -3.61,
                antisqueezed_db: 13.54,
                clearance_db: 13.2,
            },
            (19e6, 21e6),
            401,
            args.trace_noise_db,
            100e3,
            args.seed,
        )?;
        for trace in &traces {
            let path = args
                .out
                .join(format!("spectrum_{}.csv", trace.label.as_str()));
            sqz_core::io::write_spectrum(&path, trace)?;
            written.push(path);
        }
    }
    if matches!(what, "all" | "visibility") {
        let lo = synth::gen_visibility(6.4, 0.98, 0.0, 16.0, 33, 0.012, 1064, args.seed)?;
        let pump = synth::gen_visibility(5.17, 0.97, 0.0, 13.0, 33, 0.015, 532, args.seed + 1)?;
        let lo_path = args.out.join("visibility_1064nm.csv");
        let pump_path = args.out.join("visibility_532nm.csv");
        sqz_core::io::write_visibility(&lo_path, &lo)?;
        sqz_core::io::write_visibility(&pump_path, &pump)?;
        written.push(lo_path);
        written.push(pump_path);
    }
    for path in &written {
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let mut config = Config::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.set("mc.seed", seed.to_string());
    }
    let seed = config.get_u64("mc.seed")?.unwrap_or(DEFAULT_SEED);
    let (report, artifacts, failures) = report::run_report(&config, seed);
    let written = report::write_outputs(&report, &artifacts, &args.out)?;
    for path in &written {
        println!("{}", path.display());
    }
    match failures.into_iter().next() {
        None => Ok(()),
        Some(first) => {
            eprintln!("report completed with errors; see the JSON section objects");
            Err(first)
        }
    }
}
