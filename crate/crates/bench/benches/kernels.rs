use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rydchip::analysis::{fit_eit, fit_reference, EitFitOptions};
use rydchip::eit::{linear_grid, spectrum, EITParams, Noise};
use rydchip::patch::{cloud_averaged_field, offaxis_field, onaxis_field, CloudAverage, PatchModel};
use rydchip::stark::{polarizability, BasisWindow};
use rydchip::{QuantumDefectTable, RydbergState};

fn stark(c: &mut Criterion) {
    let defects = QuantumDefectTable::rubidium87();
    let window = BasisWindow::default();
    let s30 = RydbergState::from_f64(30, 0, 0.5, 0.5).unwrap();
    let d22 = RydbergState::from_f64(22, 2, 2.5, 0.5).unwrap();
    let mut g = c.benchmark_group("polarizability");
    g.sample_size(10);
    g.bench_function("30s1/2", |b| b.iter(|| polarizability(black_box(&s30), &defects, &window).unwrap()));
    g.bench_function("22d5/2 mj=1/2", |b| b.iter(|| polarizability(black_box(&d22), &defects, &window).unwrap()));
    g.finish();
}

fn eit(c: &mut Criterion) {
    let p = EITParams { gamma_p: 6.07, gamma_c: 0.61, delta_c: 0.54, omega_c: 3.0, od0: 1.2, offset: 0.0 };
    let grid = linear_grid(-20.0, 20.0, 80);
    let reference =
        spectrum(&EITParams::reference(6.07, 1.2, 0.0), &grid, Some(Noise { rms: 0.024, seed: 3 }), 100.0).unwrap();
    let data = spectrum(&p, &grid, Some(Noise { rms: 0.024, seed: 4 }), 100.0).unwrap();
    let r = fit_reference(&reference).unwrap();
    let mut g = c.benchmark_group("eit");
    g.bench_function("reference fit", |b| b.iter(|| fit_reference(black_box(&reference)).unwrap()));
    g.bench_function("eit fit", |b| b.iter(|| fit_eit(black_box(&data), &r, &EitFitOptions::default()).unwrap()));
    g.finish();
}

fn patch(c: &mut Criterion) {
    let m = PatchModel { d0: 7e5, w: 100.0, sigma_y: 130.0 };
    let mut g = c.benchmark_group("patch");
    g.bench_function("on-axis", |b| b.iter(|| onaxis_field(black_box(50.0), &m).unwrap()));
    g.bench_function("off-axis", |b| b.iter(|| offaxis_field(0.0, black_box(80.0), 50.0, &m).unwrap()));
    g.bench_function("cloud average", |b| {
        b.iter(|| cloud_averaged_field(black_box(50.0), &m, CloudAverage::Magnitude).unwrap())
    });
    g.finish();
}

criterion_group!(benches, stark, eit, patch);
criterion_main!(benches);
