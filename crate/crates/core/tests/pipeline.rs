//! End-to-end closure: the synthetic generators write the shared CSV
//! formats, ingestion reads them back, and the analyses recover the
//! generating configuration.

use std::path::PathBuf;

use sqz_core::noise_model::{db_to_lin, subtract_electronic_noise, NoiseParams};
use sqz_core::synth::{self, SpectrumLevels, TraceLabel};
use sqz_core::{curve_fit, io, pulses};

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("sqz-pipeline-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Self(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

#[test]
fn curve_pipeline_recovers_generating_parameters() {
    let dir = TempDir::new("curve");
    let truth = NoiseParams::new(0.61, 0.012, 12.4, db_to_lin(-13.2).unwrap()).unwrap();
    let powers_w: Vec<f64> = [2.0, 5.0, 8.0, 12.0, 16.0, 20.0, 28.0, 40.0]
        .iter()
        .map(|mw| mw * 1e-3)
        .collect();
    let curve = synth::gen_curve(&truth, &powers_w, 0.05, 314).unwrap();
    let path = dir.path("curve.csv");
    io::write_curve(&path, &curve).unwrap();

    let ingested = io::read_curve(&path).unwrap();
    for (a, b) in curve.points().iter().zip(ingested.points()) {
        assert!((a.pump_w - b.pump_w).abs() <= 1e-9 * a.pump_w);
        assert!((a.v_minus_db - b.v_minus_db).abs() <= 1e-9);
        assert!((a.v_plus_db - b.v_plus_db).abs() <= 1e-9);
    }

    let fit = curve_fit::fit_variance_model(&ingested, Some(truth.electronic_noise)).unwrap();
    assert!((fit.params.eta_total - truth.eta_total).abs() <= 3.0 * fit.sigma_eta);
    assert!((fit.params.alpha - truth.alpha).abs() <= 3.0 * fit.sigma_alpha);
    assert!((fit.params.delta - truth.delta).abs() <= 3.0 * fit.sigma_delta);
}

#[test]
fn spectrum_pipeline_recovers_configured_squeezing() {
    let dir = TempDir::new("spectra");
    let levels = SpectrumLevels {
        squeezed_db: -3.2,
        antisqueezed_db: 13.5,
        clearance_db: 15.3,
    };
    // Enough points that trace_noise/sqrt(n) sits well under 0.05 dB.
    let traces = synth::gen_spectrum(&levels, (19e6, 21e6), 2001, 0.15, 100e3, 6).unwrap();
    let mut averages = std::collections::HashMap::new();
    for trace in &traces {
        let path = dir.path(&format!("spectrum_{}.csv", trace.label.as_str()));
        io::write_spectrum(&path, trace).unwrap();
        let back = io::read_spectrum(&path).unwrap();
        assert_eq!(*trace, back);
        averages.insert(back.label, back.band_average_db());
    }
    let squeezed_rel = averages[&TraceLabel::Squeezed] - averages[&TraceLabel::Shot];
    let clearance = averages[&TraceLabel::Shot] - averages[&TraceLabel::Electronic];
    let corrected = subtract_electronic_noise(squeezed_rel, clearance).unwrap();
    let expected = subtract_electronic_noise(levels.squeezed_db, levels.clearance_db).unwrap();
    assert!(
        (corrected - expected).abs() <= 0.05,
        "pipeline {corrected:.3} dB vs configured {expected:.3} dB"
    );
}

#[test]
fn visibility_pipeline_recovers_duration() {
    let dir = TempDir::new("visibility");
    let scan = synth::gen_visibility(6.4, 0.98, 0.0, 16.0, 41, 0.01, 1064, 9).unwrap();
    let path = dir.path("visibility.csv");
    io::write_visibility(&path, &scan).unwrap();
    let back = io::read_visibility(&path).unwrap();
    assert_eq!(scan, back);
    let fit = pulses::fit_pulse(&back).unwrap();
    assert!((fit.tau_fwhm_ps - 6.4).abs() <= 3.0 * fit.tau_sigma_ps);
}
