use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lagcons::banded::BandMatrix;
use lagcons::claws::{audit, LawId};
use lagcons::{step, EosMode, Geometry, TwoLayerView};
use lagcons_bench::pulse;

const TAU: f64 = 2e-3;

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for mode in [EosMode::Pointwise, EosMode::Conservative] {
        for g in [Geometry::Planar, Geometry::Spherical] {
            let (layer, params) = pulse(g, 100, mode);
            let id = BenchmarkId::new(format!("{mode:?}"), format!("n{}", g.exponent()));
            group.bench_with_input(id, &layer, |b, layer| {
                b.iter(|| step(black_box(layer), TAU, &params).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_audit(c: &mut Criterion) {
    let (lo, params) = pulse(Geometry::Planar, 100, EosMode::Conservative);
    let (hi, _) = step(&lo, TAU, &params).unwrap();
    let view = TwoLayerView::new(&lo, &hi, TAU).unwrap();
    c.bench_function("audit_all_laws_n100", |b| {
        b.iter(|| {
            for law in LawId::ALL {
                black_box(audit(law, black_box(&view), &params).unwrap());
            }
        })
    });
}

fn bench_band_solve(c: &mut Criterion) {
    let n = 202;
    let mut a = BandMatrix::zeros(n, 2, 2);
    for i in 0..n {
        for j in i.saturating_sub(2)..(i + 3).min(n) {
            a.set(i, j, if i == j { 4.0 } else { 1.0 / (1 + i + j) as f64 });
        }
    }
    let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    c.bench_function("band_lu_factor_solve_202", |b| {
        b.iter(|| {
            let lu = a.clone().factor().unwrap();
            let mut x = rhs.clone();
            lu.solve_in_place(&mut x).unwrap();
            black_box(x)
        })
    });
}

criterion_group!(benches, bench_step, bench_audit, bench_band_solve);
criterion_main!(benches);
