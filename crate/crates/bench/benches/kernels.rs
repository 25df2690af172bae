use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use g2ghost::{
    bessel_j1, fit_profile, ghost_image_analytic, hbt_scan, make_double_pinhole_mask, sample_amplitudes, somb,
    AmplitudeMode, DetectorGrid, Dimensionality, Estimator, Executor, FieldKernel, FitOptions, Geometry,
    HbtScanConfig, KernelParams, ModelKind, ProfileModel, SeedSpec, SourceSpec, Statistics, Vec2,
};
use num_complex::Complex64;

const LAMBDA: f64 = 780e-9;
const L: f64 = 0.910;

fn special(c: &mut Criterion) {
    let xs: Vec<f64> = (0..1000).map(|k| 0.05 * k as f64).collect();
    c.bench_function("bessel_j1 x1000", |b| {
        b.iter(|| xs.iter().map(|&x| bessel_j1(black_box(x)).unwrap()).sum::<f64>())
    });
    c.bench_function("somb x1000", |b| b.iter(|| xs.iter().map(|&x| somb(black_box(x)).unwrap()).sum::<f64>()));
}

fn propagation(c: &mut Criterion) {
    let source = SourceSpec::disk(0.36e-3, 0.02e-3).unwrap();
    let emitters = source.emitters();
    let positions: Vec<Vec2> = emitters.iter().map(|e| e.pos).collect();
    let targets = DetectorGrid::centered(0.1e-3, 91, 31).unwrap().points();
    let kernel = FieldKernel::new(&positions, &targets, L, LAMBDA).unwrap();
    let amps = sample_amplitudes(&emitters, SeedSpec::new(1, 0), AmplitudeMode::GaussianField);
    let mut out = vec![Complex64::new(0.0, 0.0); targets.len()];
    c.bench_function("field kernel apply 256x2821", |b| {
        b.iter(|| kernel.apply(black_box(&amps), &mut out))
    });
}

fn scans(c: &mut Criterion) {
    let cfg = HbtScanConfig {
        source: SourceSpec::rectangle(0.36e-3, 0.16e-3, 0.02e-3).unwrap(),
        geometry: Geometry::balanced_at(LAMBDA, L).unwrap(),
        fixed_point: Vec2::ZERO,
        scan: DetectorGrid::line(-3e-3, 0.125e-3, 49, 0.0).unwrap(),
        ensemble_size: 200,
        seed: 1,
        estimator: Estimator::Intensity,
    };
    let exec = Executor::new(1);
    c.bench_function("hbt_scan intensity 200x49", |b| b.iter(|| hbt_scan(black_box(&cfg), &exec).unwrap()));

    let mask = make_double_pinhole_mask(DetectorGrid::centered(0.1e-3, 91, 31).unwrap(), 2e-3, 5e-3).unwrap();
    let params = KernelParams::new(0.36e-3, LAMBDA, L, Dimensionality::TwoD).unwrap();
    let scan = DetectorGrid::line(-5e-3, 0.125e-3, 81, 0.0).unwrap();
    c.bench_function("ghost_image_analytic 81 points", |b| {
        b.iter(|| ghost_image_analytic(&mask, Statistics::Fermion, &params, black_box(&scan), &exec).unwrap())
    });
}

fn fitting(c: &mut Criterion) {
    let xs: Vec<f64> = (0..81).map(|k| -5e-3 + 0.125e-3 * k as f64).collect();
    let truth = ProfileModel::gaussian_dips(1.0, &[(0.4, -2.5e-3, 0.6e-3), (0.4, 2.5e-3, 0.6e-3)]).unwrap();
    let ys: Vec<f64> = xs.iter().map(|&x| truth.eval(x) + 0.01 * (x * 1e4).sin()).collect();
    let opts = FitOptions::default();
    c.bench_function("fit_profile gaussian_dips(2)", |b| {
        b.iter(|| fit_profile(&xs, black_box(&ys), ModelKind::GaussianDips(2), &opts).unwrap())
    });
}

criterion_group!(benches, special, propagation, scans, fitting);
criterion_main!(benches);
