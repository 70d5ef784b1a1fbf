use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fujita_bench::{gaussian_state, reference_params};
use fujita_core::dynamics::{evolve, DtControl};
use fujita_core::energy::{energy, energy_ratio_f};
use fujita_core::spectrum::{discretize_a, Boundary, SpectralFrame};
use fujita_core::steady::shoot;
use fujita_core::Frame;

fn steady(c: &mut Criterion) {
    let params = reference_params();
    c.bench_function("shoot_selfsimilar_alpha2", |b| {
        b.iter(|| shoot(&params, black_box(2.0), Frame::SelfSimilar, 40.0).unwrap())
    });
    let six = fujita_core::ProblemParams::new(6, 5.0).unwrap();
    c.bench_function("shoot_physical_alpha1", |b| {
        b.iter(|| shoot(&six, black_box(1.0), Frame::Physical, 200.0).unwrap())
    });
}

fn energies(c: &mut Criterion) {
    let six = fujita_core::ProblemParams::new(6, 5.0).unwrap();
    let state = shoot(&six, 1.5, Frame::SelfSimilar, 40.0).unwrap();
    c.bench_function("energy_bounded_state", |b| {
        b.iter(|| energy(black_box(&state), &six).unwrap())
    });
    let params = reference_params();
    c.bench_function("energy_ratio_gamma", |b| {
        b.iter(|| energy_ratio_f(black_box(&params)).unwrap())
    });
}

fn spectral(c: &mut Criterion) {
    let params = reference_params();
    let frame = SpectralFrame::new(&params, 5).unwrap();
    c.bench_function("spectral_frame_build", |b| {
        b.iter(|| SpectralFrame::new(black_box(&params), 5).unwrap())
    });
    c.bench_function("project_gaussian", |b| {
        b.iter(|| frame.project_coeffs(|r| (-r * r / 8.0).exp()).unwrap())
    });
    c.bench_function("discretized_eigenvalues_4000", |b| {
        b.iter(|| {
            discretize_a(&frame, 0.05, 25.0, 4000, Boundary::Dirichlet)
                .unwrap()
                .leading_eigenvalues(3)
        })
    });
}

fn dynamics(c: &mut Criterion) {
    let ctl = DtControl {
        snapshots: false,
        ..DtControl::default()
    };
    let mut group = c.benchmark_group("evolve");
    group.sample_size(10);
    for points in [200, 800] {
        let state = gaussian_state(points).unwrap();
        group.bench_function(format!("selfsimilar_{points}_pts_unit_span"), |b| {
            b.iter(|| evolve(black_box(state.clone()), 1.0, &ctl).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, steady, energies, spectral, dynamics);
criterion_main!(benches);
