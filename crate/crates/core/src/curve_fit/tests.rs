use super::*;
use approx::{assert_abs_diff_eq, assert_relative_eq};

fn reference_params() -> NoiseParams {
    NoiseParams::new(0.61, 0.012, 12.4, 0.0479).unwrap()
}

fn model_curve(params: &NoiseParams, powers_mw: &[f64], sigma_db: f64) -> MeasuredCurve {
    let points = powers_mw
        .iter()
        .map(|&mw| {
            let pw = mw * 1e-3;
            CurvePoint {
                pump_w: pw,
                v_minus_db: model_db(pw, params, Quadrature::Squeezed),
                v_plus_db: model_db(pw, params, Quadrature::Antisqueezed),
                sigma_minus_db: sigma_db,
                sigma_plus_db: sigma_db,
            }
        })
        .collect();
    MeasuredCurve::new(points, 20e6, 100e3).unwrap()
}

#[test]
fn jacobian_vanishes_in_delta_at_zero() {
    let params = NoiseParams::new(0.61, 0.0, 12.4, 0.0479).unwrap();
    let powers = [0.002, 0.01, 0.02, 0.04];
    let jac = model_jacobian(&params, &powers);
    for row in 0..jac.nrows() {
        assert_eq!(jac[(row, 1)], 0.0);
    }
}

#[test]
fn jacobian_alpha_signs_at_zero_delta() {
    let params = NoiseParams::new(0.8, 0.0, 5.0, 0.0).unwrap();
    let powers = [0.005, 0.02];
    let jac = model_jacobian(&params, &powers);
    let n = powers.len();
    for i in 0..n {
        assert!(
            jac[(i, 2)] < 0.0,
            "squeezed quadrature must deepen with alpha"
        );
        assert!(jac[(n + i, 2)] > 0.0, "antisqueezing must grow with alpha");
    }
}

/// Central finite differences on the physical parameters, relative step 1e−6.
fn fd_jacobian(params: &NoiseParams, powers: &[f64]) -> DMatrix<f64> {
    let n = powers.len();
    let mut jac = DMatrix::zeros(2 * n, 4);
    let base = [
        params.eta_total,
        params.delta,
        params.alpha,
        params.electronic_noise,
    ];
    for j in 0..4 {
        let h = 1e-6 * base[j].abs().max(1e-4);
        let perturb = |s: f64| {
            let mut p = base;
            p[j] += s * h;
            NoiseParams {
                eta_total: p[0],
                delta: p[1],
                alpha: p[2],
                electronic_noise: p[3],
            }
        };
        let (plus, minus) = (perturb(1.0), perturb(-1.0));
        for (i, &pw) in powers.iter().enumerate() {
            for (block, quad) in [Quadrature::Squeezed, Quadrature::Antisqueezed]
                .into_iter()
                .enumerate()
            {
                let row = block * n + i;
                jac[(row, j)] =
                    (model_db(pw, &plus, quad) - model_db(pw, &minus, quad)) / (2.0 * h);
            }
        }
    }
    jac
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    for _ in 0..100 {
        let params = NoiseParams::new(
            rng.gen_range(0.3..0.95),
            rng.gen_range(0.001..0.3),
            rng.gen_range(1.0..20.0),
            rng.gen_range(0.0..0.1),
        )
        .unwrap();
        let powers = [rng.gen_range(0.001..0.01), rng.gen_range(0.01..0.05)];
        let analytic = model_jacobian(&params, &powers);
        let numeric = fd_jacobian(&params, &powers);
        for i in 0..analytic.nrows() {
            for j in 0..analytic.ncols() {
                assert_abs_diff_eq!(analytic[(i, j)], numeric[(i, j)], epsilon = 1e-6);
            }
        }
    }
}

#[test]
fn noiseless_fit_recovers_parameters_exactly() {
    let truth = reference_params();
    let curve = model_curve(
        &truth,
        &[2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0],
        1e-4,
    );
    let fit = fit_variance_model(&curve, Some(truth.electronic_noise)).unwrap();
    assert_relative_eq!(fit.params.eta_total, truth.eta_total, max_relative = 1e-6);
    assert_relative_eq!(fit.params.delta, truth.delta, max_relative = 1e-6);
    assert_relative_eq!(fit.params.alpha, truth.alpha, max_relative = 1e-6);
}

#[test]
fn noiseless_fit_with_free_en() {
    let truth = reference_params();
    let curve = model_curve(
        &truth,
        &[2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0],
        1e-4,
    );
    let fit = fit_variance_model(&curve, None).unwrap();
    assert_relative_eq!(fit.params.eta_total, truth.eta_total, max_relative = 1e-4);
    assert_relative_eq!(fit.params.alpha, truth.alpha, max_relative = 1e-4);
    assert_relative_eq!(
        fit.params.electronic_noise,
        truth.electronic_noise,
        max_relative = 1e-3
    );
    assert!(fit.sigma_en.is_some());
    assert_eq!(fit.covariance.nrows(), 4);
}

#[test]
fn covariance_is_psd_and_residuals_finite() {
    let truth = reference_params();
    let curve = model_curve(&truth, &[2.0, 5.0, 10.0, 20.0, 30.0, 40.0], 0.05);
    let fit = fit_variance_model(&curve, Some(truth.electronic_noise)).unwrap();
    assert_eq!(fit.covariance.nrows(), 3);
    let trace: f64 = fit.covariance.diagonal().iter().sum();
    let eig = fit.covariance.clone().symmetric_eigen();
    for &v in eig.eigenvalues.iter() {
        assert!(v >= -1e-12 * trace);
    }
    assert!(fit.per_point_residuals.iter().all(|r| r.is_finite()));
    assert_eq!(fit.per_point_residuals.len(), 12);
}

#[test]
fn curve_validation_rejects_bad_input() {
    let good = CurvePoint {
        pump_w: 0.002,
        v_minus_db: -1.0,
        v_plus_db: 2.0,
        sigma_minus_db: 0.05,
        sigma_plus_db: 0.05,
    };
    assert!(MeasuredCurve::new(vec![good; 3], 20e6, 1e5).is_err());
    let mut non_monotone = vec![good; 4];
    for (i, p) in non_monotone.iter_mut().enumerate() {
        p.pump_w = 0.002 * (4 - i) as f64;
    }
    assert!(MeasuredCurve::new(non_monotone, 20e6, 1e5).is_err());
    let mut bad_sigma: Vec<CurvePoint> = (0..4)
        .map(|i| CurvePoint {
            pump_w: 0.002 * (i + 1) as f64,
            ..good
        })
        .collect();
    bad_sigma[2].sigma_plus_db = -0.01;
    assert!(MeasuredCurve::new(bad_sigma, 20e6, 1e5).is_err());
}

#[test]
fn propagation_deterministic_limit_has_zero_errors() {
    let fit = FitResult::from_parts(NoiseParams::new(0.61, 0.0, 12.4, 0.0).unwrap(), 0.0, 0.0);
    let out = propagate_waveguide_squeezing(&fit, -3.90, 0.0, 20_000, 1).unwrap();
    assert_eq!(out.upper_err_db, 0.0);
    assert_eq!(out.lower_err_db, 0.0);
    assert_eq!(out.n_rejected, 0);
    // δ = 0 single root: x = (v − 1 + η)/η → −15.45 dB.
    assert_abs_diff_eq!(out.central_db, -15.45, epsilon = 0.01);
}

#[test]
fn propagation_reference_inputs_are_strongly_asymmetric() {
    let fit = FitResult::from_parts(
        NoiseParams::new(0.61, 0.012, 12.4, 0.0).unwrap(),
        0.02,
        0.030,
    );
    let out = propagate_waveguide_squeezing(&fit, -3.90, 0.05, 50_000, 42).unwrap();
    assert!(
        out.lower_err_db > 2.0 * out.upper_err_db,
        "lower {} vs upper {}",
        out.lower_err_db,
        out.upper_err_db
    );
    assert!(
        (-17.0..=-14.5).contains(&out.central_db),
        "central {}",
        out.central_db
    );
    assert!(out.n_rejected * 2 < out.n_samples);
    assert!(out.n_rejected > 0);
    // Percentile ordering: central − lower ≤ central ≤ central + upper.
    assert!(out.lower_err_db >= 0.0);
    assert!(out.upper_err_db >= 0.0);
}

#[test]
fn propagation_is_seed_deterministic() {
    let fit = FitResult::from_parts(
        NoiseParams::new(0.61, 0.012, 12.4, 0.0).unwrap(),
        0.02,
        0.030,
    );
    let a = propagate_waveguide_squeezing(&fit, -3.90, 0.05, 10_000, 7).unwrap();
    let b = propagate_waveguide_squeezing(&fit, -3.90, 0.05, 10_000, 7).unwrap();
    assert_eq!(a, b);
    let c = propagate_waveguide_squeezing(&fit, -3.90, 0.05, 10_000, 8).unwrap();
    assert_ne!(a.central_db, c.central_db);
}

#[test]
fn propagation_rejects_tiny_sample_counts() {
    let fit = FitResult::from_parts(reference_params(), 0.02, 0.03);
    assert!(matches!(
        propagate_waveguide_squeezing(&fit, -3.9, 0.05, 100, 1),
        Err(FitError::TooFewSamples { .. })
    ));
}

#[test]
fn propagation_errors_on_excessive_rejection() {
    // Nearly all draws land below the loss floor for this eta.
    let fit = FitResult::from_parts(NoiseParams::new(0.3, 0.0, 12.4, 0.0).unwrap(), 1e-6, 0.0);
    assert!(matches!(
        propagate_waveguide_squeezing(&fit, -3.9, 1e-6, 10_000, 1),
        Err(FitError::ExcessiveRejection { .. })
    ));
}

#[test]
fn projection_reproduces_application_levels() {
    let budget = LossBudget::from_entries([("wg", 0.87), ("direct", 0.9)]).unwrap();
    // SRS projection: generated level through waveguide and displacement loss.
    let srs = project_application_squeezing(-15.2, &budget, &["wg", "direct"]).unwrap();
    assert_abs_diff_eq!(srs, -6.2, epsilon = 0.3);
    // On-chip projection: waveguide loss only.
    let chip = project_application_squeezing(-15.2, &budget, &["wg"]).unwrap();
    assert_abs_diff_eq!(chip, -8.1, epsilon = 0.3);
    // Empty subset is the identity.
    let same = project_application_squeezing(-15.2, &budget, &[]).unwrap();
    assert_abs_diff_eq!(same, -15.2, epsilon = 1e-12);
    assert!(project_application_squeezing(-15.2, &budget, &["oops"]).is_err());
}

#[test]
fn recovered_parameters_converge_as_noise_shrinks() {
    // Same seed at each noise level so the normalized noise draws match and
    // the parameter error scales down with sigma.
    let truth = reference_params();
    let powers_w: Vec<f64> = [2.0, 5.0, 8.0, 12.0, 16.0, 20.0, 28.0, 40.0]
        .iter()
        .map(|mw| mw * 1e-3)
        .collect();
    let mut eta_errors = Vec::new();
    for &noise in &[0.1, 0.01, 0.001] {
        let curve = crate::synth::gen_curve(&truth, &powers_w, noise, 99).unwrap();
        let fit = fit_variance_model(&curve, Some(truth.electronic_noise)).unwrap();
        eta_errors.push((fit.params.eta_total - truth.eta_total).abs());
    }
    assert!(
        eta_errors[2] < eta_errors[0] / 10.0,
        "eta error did not shrink with noise: {eta_errors:?}"
    );
    assert!(eta_errors[2] < 1e-3);
}
