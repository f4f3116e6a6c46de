//! Static SVG renderings of the analysis results: squeezing/antisqueezing
//! versus pump power with fit curves, spectrum panels, visibility fits, and
//! mode-intensity heatmaps.

use sqz_core::curve_fit::{model_db, MeasuredCurve};
use sqz_core::modes::ScalarMode;
use sqz_core::noise_model::{NoiseParams, Quadrature};
use sqz_core::pulses::{visibility_model, PulseFit, VisibilityScan};
use sqz_core::synth::SpectrumTrace;

use crate::svg::{heat_color, AxisMap, Canvas};

const W: f64 = 640.0;
const H: f64 = 440.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 48.0;

const SQUEEZED_COLOR: &str = "#1a9850";
const ANTISQUEEZED_COLOR: &str = "#e08214";
const SHOT_COLOR: &str = "#000000";
const ELECTRONIC_COLOR: &str = "#808080";

fn frame(canvas: &mut Canvas, x: &AxisMap, y: &AxisMap, x_label: &str, y_label: &str) {
    canvas.rect(
        x.pix_min,
        y.pix_max,
        x.pix_max - x.pix_min,
        y.pix_min - y.pix_max,
        "#ffffff",
    );
    canvas.line(x.pix_min, y.pix_min, x.pix_max, y.pix_min, "#000000", 1.0);
    canvas.line(x.pix_min, y.pix_min, x.pix_min, y.pix_max, "#000000", 1.0);
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x.data_min + t * (x.data_max - x.data_min);
        let xp = x.map(xv);
        canvas.line(xp, y.pix_min, xp, y.pix_min + 4.0, "#000000", 1.0);
        canvas.text(xp, y.pix_min + 18.0, 11.0, "middle", &format!("{xv:.1}"));
        let yv = y.data_min + t * (y.data_max - y.data_min);
        let yp = y.map(yv);
        canvas.line(x.pix_min - 4.0, yp, x.pix_min, yp, "#000000", 1.0);
        canvas.text(x.pix_min - 8.0, yp + 4.0, 11.0, "end", &format!("{yv:.1}"));
    }
    canvas.text(
        0.5 * (x.pix_min + x.pix_max),
        y.pix_min + 36.0,
        12.0,
        "middle",
        x_label,
    );
    canvas.text(16.0, y.pix_max - 8.0, 12.0, "start", y_label);
}

/// Squeezing/antisqueezing data markers with the fitted model curves.
pub fn fit_curve_plot(curve: &MeasuredCurve, params: &NoiseParams) -> String {
    let pts = curve.points();
    let pmax_mw = pts.last().map(|p| p.pump_w * 1e3).unwrap_or(1.0) * 1.08;
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for p in pts {
        vmin = vmin.min(p.v_minus_db);
        vmax = vmax.max(p.v_plus_db);
    }
    let x = AxisMap {
        data_min: 0.0,
        data_max: pmax_mw,
        pix_min: MARGIN_L,
        pix_max: W - MARGIN_R,
    };
    let y = AxisMap {
        data_min: vmin - 1.0,
        data_max: vmax + 1.0,
        pix_min: H - MARGIN_B,
        pix_max: MARGIN_T,
    };
    let mut canvas = Canvas::new(W, H);
    frame(
        &mut canvas,
        &x,
        &y,
        "pump power (mW)",
        "noise power (dB rel. shot)",
    );
    canvas.line(x.pix_min, y.map(0.0), x.pix_max, y.map(0.0), "#999999", 0.7);

    for (quad, color) in [
        (Quadrature::Squeezed, SQUEEZED_COLOR),
        (Quadrature::Antisqueezed, ANTISQUEEZED_COLOR),
    ] {
        let line: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let pw = pmax_mw * i as f64 / 200.0 * 1e-3;
                (x.map(pw * 1e3), y.map(model_db(pw, params, quad)))
            })
            .collect();
        canvas.polyline(&line, color, 1.5);
    }
    for p in pts {
        let xp = x.map(p.pump_w * 1e3);
        for (v, sigma, color) in [
            (p.v_minus_db, p.sigma_minus_db, SQUEEZED_COLOR),
            (p.v_plus_db, p.sigma_plus_db, ANTISQUEEZED_COLOR),
        ] {
            canvas.line(xp, y.map(v - sigma), xp, y.map(v + sigma), color, 1.0);
            canvas.circle(xp, y.map(v), 3.0, color);
        }
    }
    canvas.finish()
}

/// The four spectrum-analyzer traces on a shared frequency axis.
pub fn spectra_plot(traces: &[SpectrumTrace]) -> String {
    let mut fmin = f64::INFINITY;
    let mut fmax = f64::NEG_INFINITY;
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for t in traces {
        fmin = fmin.min(*t.freqs_hz.first().unwrap_or(&0.0));
        fmax = fmax.max(*t.freqs_hz.last().unwrap_or(&1.0));
        for &l in &t.levels_db {
            vmin = vmin.min(l);
            vmax = vmax.max(l);
        }
    }
    let x = AxisMap {
        data_min: fmin / 1e6,
        data_max: fmax / 1e6,
        pix_min: MARGIN_L,
        pix_max: W - MARGIN_R,
    };
    let y = AxisMap {
        data_min: vmin - 1.0,
        data_max: vmax + 1.0,
        pix_min: H - MARGIN_B,
        pix_max: MARGIN_T,
    };
    let mut canvas = Canvas::new(W, H);
    frame(
        &mut canvas,
        &x,
        &y,
        "frequency (MHz)",
        "noise power (dB rel. shot)",
    );
    for t in traces {
        let color = match t.label {
            sqz_core::synth::TraceLabel::Squeezed => SQUEEZED_COLOR,
            sqz_core::synth::TraceLabel::Antisqueezed => ANTISQUEEZED_COLOR,
            sqz_core::synth::TraceLabel::Shot => SHOT_COLOR,
            sqz_core::synth::TraceLabel::Electronic => ELECTRONIC_COLOR,
        };
        let line: Vec<(f64, f64)> = t
            .freqs_hz
            .iter()
            .zip(&t.levels_db)
            .map(|(&f, &l)| (x.map(f / 1e6), y.map(l)))
            .collect();
        canvas.polyline(&line, color, 1.0);
    }
    canvas.finish()
}

/// Visibility scans with their Gaussian fits.
pub fn visibility_plot(scans: &[(&VisibilityScan, &PulseFit)]) -> String {
    let mut dmin = f64::INFINITY;
    let mut dmax = f64::NEG_INFINITY;
    for (scan, _) in scans {
        for p in scan.points() {
            dmin = dmin.min(p.delay_ps);
            dmax = dmax.max(p.delay_ps);
        }
    }
    let x = AxisMap {
        data_min: dmin,
        data_max: dmax,
        pix_min: MARGIN_L,
        pix_max: W - MARGIN_R,
    };
    let y = AxisMap {
        data_min: 0.0,
        data_max: 1.05,
        pix_min: H - MARGIN_B,
        pix_max: MARGIN_T,
    };
    let mut canvas = Canvas::new(W, H);
    frame(&mut canvas, &x, &y, "delay (ps)", "visibility");
    let colors = ["#d73027", "#1a9850", "#4575b4"];
    for (k, (scan, fit)) in scans.iter().enumerate() {
        let color = colors[k % colors.len()];
        let line: Vec<(f64, f64)> = (0..=240)
            .map(|i| {
                let d = dmin + (dmax - dmin) * i as f64 / 240.0;
                let v = visibility_model(d, fit.tau_fwhm_ps, fit.amplitude, fit.center_ps);
                (x.map(d), y.map(v))
            })
            .collect();
        canvas.polyline(&line, color, 1.5);
        for p in scan.points() {
            canvas.circle(x.map(p.delay_ps), y.map(p.visibility), 2.5, color);
        }
    }
    canvas.finish()
}

/// Mode-intensity heatmap with a crosshair on the intensity peak.
pub fn mode_heatmap(mode: &ScalarMode, title: &str) -> String {
    let g = &mode.grid;
    let plot_w = W - MARGIN_L - MARGIN_R;
    let plot_h = H - MARGIN_T - MARGIN_B;
    let cell_w = plot_w / g.nx as f64;
    let cell_h = plot_h / g.ny as f64;
    let peak_intensity = mode
        .field
        .iter()
        .map(|v| v * v)
        .fold(f64::MIN_POSITIVE, f64::max);

    let mut canvas = Canvas::new(W, H);
    canvas.text(0.5 * W, 18.0, 13.0, "middle", title);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = mode.field[j * g.nx + i];
            let t = v * v / peak_intensity;
            // y flipped so larger y plots upward
            let px = MARGIN_L + i as f64 * cell_w;
            let py = MARGIN_T + (g.ny - 1 - j) as f64 * cell_h;
            canvas.rect(px, py, cell_w + 0.05, cell_h + 0.05, &heat_color(t));
        }
    }
    let (pi, pj) = mode.peak_cell();
    let cx = MARGIN_L + (pi as f64 + 0.5) * cell_w;
    let cy = MARGIN_T + (g.ny - 1 - pj) as f64 * cell_h + 0.5 * cell_h;
    canvas.line(cx - 8.0, cy, cx + 8.0, cy, "#ffffff", 1.2);
    canvas.line(cx, cy - 8.0, cx, cy + 8.0, "#ffffff", 1.2);
    canvas.text(
        0.5 * W,
        H - 16.0,
        12.0,
        "middle",
        &format!(
            "n_eff = {:.5}, grid {}x{} at {:.3} um",
            mode.n_eff, g.nx, g.ny, g.dx_um
        ),
    );
    canvas.finish()
}
