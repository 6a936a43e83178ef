//! Kernel benchmarks: eigendecomposition, quadrature, and shape search.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mamv_core::geometry::KinkSet;
use mamv_core::linalg::{SpdShape, SymMatrix};
use mamv_core::quadrature::{AverageKind, QuadratureRule};
use mamv_core::search::{self, SearchBudget, SearchOptions};

fn bench_eigen(c: &mut Criterion) {
    let m = SymMatrix::from_rows(&[
        vec![2.0, 0.4, -0.1],
        vec![0.4, 1.1, 0.3],
        vec![-0.1, 0.3, 0.7],
    ])
    .unwrap();
    c.bench_function("eigen_3x3", |b| {
        b.iter(|| black_box(&m).eigen().unwrap())
    });
}

fn bench_quadrature(c: &mut Criterion) {
    let rule = QuadratureRule::new(2, 8, 32).unwrap();
    let shape = SpdShape::new(SymMatrix::diag(&[2.0, 0.5])).unwrap().normalized();
    let smooth = |p: &[f64]| (p[0] * p[0] + p[1] * p[1]) / 2.0 + (p[0] * 1.3).sin();
    c.bench_function("ellipsoid_average_smooth", |b| {
        b.iter(|| {
            rule.ellipsoid_average(&smooth, &[0.2, 0.1], &shape, 0.1, AverageKind::Solid, &[])
                .unwrap()
        })
    });

    let kinks = [KinkSet::Circle {
        center: [0.0, 0.0],
        radius: 1.0,
    }];
    let cone = |p: &[f64]| {
        let d = (p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0;
        if d > 0.0 {
            0.5 * d * d
        } else {
            0.0
        }
    };
    c.bench_function("ellipsoid_average_kinked", |b| {
        b.iter(|| {
            rule.ellipsoid_average(&cone, &[1.0, 0.0], &shape, 0.05, AverageKind::Solid, &kinks)
                .unwrap()
        })
    });
}

fn bench_search(c: &mut Criterion) {
    let h = SymMatrix::from_rows(&[vec![3.0, 0.4], vec![0.4, 1.2]]).unwrap();
    let objective = move |a: &SpdShape| -> mamv_core::Result<f64> {
        let am = a.matrix().to_matrix();
        let prod = am.transpose().mul(&h.to_matrix()).mul(&am);
        Ok(prod.get(0, 0) + prod.get(1, 1))
    };
    c.bench_function("inf_restricted_trace_2d", |b| {
        b.iter(|| {
            search::inf_restricted(
                &objective,
                2,
                10.0,
                &SearchBudget::default(),
                SearchOptions::default(),
            )
            .unwrap()
        })
    });
}

criterion_group!(kernels, bench_eigen, bench_quadrature, bench_search);
criterion_main!(kernels);
