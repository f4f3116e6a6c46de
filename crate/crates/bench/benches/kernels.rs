use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use sqz_core::curve_fit::{fit_variance_model, propagate_waveguide_squeezing, FitResult};
use sqz_core::modes::{solve_fundamental, WaveguideGeometry};
use sqz_core::noise_model::{db_to_lin, variance_pair, NoiseParams};
use sqz_core::polarization::solve_chain_angles;
use sqz_core::synth;

fn reference_params() -> NoiseParams {
    NoiseParams::new(0.61, 0.012, 12.4, db_to_lin(-13.2).unwrap()).unwrap()
}

fn bench_variance_model(c: &mut Criterion) {
    let params = reference_params();
    c.bench_function("variance_pair", |b| {
        b.iter(|| variance_pair(black_box(0.020), black_box(&params)).unwrap())
    });
}

fn bench_fit(c: &mut Criterion) {
    let truth = reference_params();
    let powers_w: Vec<f64> = [2.0, 5.0, 8.0, 12.0, 16.0, 20.0, 28.0, 40.0]
        .iter()
        .map(|mw| mw * 1e-3)
        .collect();
    let curve = synth::gen_curve(&truth, &powers_w, 0.05, 1).unwrap();
    c.bench_function("fit_variance_model_8_points", |b| {
        b.iter(|| fit_variance_model(black_box(&curve), Some(truth.electronic_noise)).unwrap())
    });
}

fn bench_monte_carlo(c: &mut Criterion) {
    let fit = FitResult::from_parts(
        NoiseParams::new(0.61, 0.012, 12.4, 0.0).unwrap(),
        0.02,
        0.030,
    );
    c.bench_function("propagate_10k_samples", |b| {
        b.iter(|| propagate_waveguide_squeezing(black_box(&fit), -3.90, 0.05, 10_000, 7).unwrap())
    });
}

fn bench_mode_solve(c: &mut Criterion) {
    let geom = WaveguideGeometry::default_ridge();
    let mut group = c.benchmark_group("modes");
    group.sample_size(10);
    group.bench_function("solve_fundamental_default_ridge", |b| {
        b.iter(|| solve_fundamental(black_box(&geom)).unwrap())
    });
    group.finish();
}

fn bench_chain_solver(c: &mut Criterion) {
    c.bench_function("solve_chain_angles_90_10", |b| {
        b.iter(|| solve_chain_angles(black_box(0.9), black_box(0.0)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_variance_model,
    bench_fit,
    bench_monte_carlo,
    bench_mode_solve,
    bench_chain_solver
);
criterion_main!(benches);
