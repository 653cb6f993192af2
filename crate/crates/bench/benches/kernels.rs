use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use riesz_bench::{hex_configuration, shell_point};
use riesz_core::{EnergyEvaluator, EwaldEvaluator, Lattice, RieszExponent, SummationControl, TorusPoint};

fn potential(c: &mut Criterion) {
    let ctl = SummationControl::default();
    let mut group = c.benchmark_group("potential");
    for (name, e) in [("s=1", RieszExponent::Riesz(1.0)), ("log", RieszExponent::Log)] {
        let ev = EwaldEvaluator::new(&Lattice::hexagonal(), e, &ctl).unwrap();
        let x = TorusPoint::new(&[0.31, 0.42]);
        group
            .bench_function(BenchmarkId::new("exact", name), |b| b.iter(|| ev.potential(black_box(x.frac())).unwrap()));
        let tab = ev.clone().tabulated(1e-12);
        group.bench_function(BenchmarkId::new("tabulated", name), |b| {
            b.iter(|| tab.potential(black_box(x.frac())).unwrap())
        });
    }
    group.finish();
}

fn energy_and_gradient(c: &mut Criterion) {
    let ctl = SummationControl::default();
    let mut group = c.benchmark_group("energy_and_gradient");
    for n in [16usize, 64] {
        let cfg = hex_configuration(n);
        let flat = cfg.flat();
        let ev = EnergyEvaluator::new(cfg.lattice(), RieszExponent::Riesz(1.0), &ctl).unwrap();
        let mut grad = vec![0.0; flat.len()];
        group.bench_with_input(BenchmarkId::from_parameter(n), &flat, |b, flat| {
            b.iter(|| ev.energy_and_gradient(black_box(flat), &mut grad).unwrap())
        });
    }
    group.finish();
}

fn shell(c: &mut Criterion) {
    let mut group = c.benchmark_group("shell_sweep");
    group.sample_size(10);
    let x = shell_point(4);
    group.bench_function("d=4 L=20", |b| {
        b.iter(|| riesz_core::shell_sweep(&Lattice::cubic(4), 1.0, black_box(&x), &[5.0, 10.0, 20.0]).unwrap())
    });
    group.finish();
}

criterion_group!(benches, potential, energy_and_gradient, shell);
criterion_main!(benches);
