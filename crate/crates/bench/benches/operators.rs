//! Operator and solver benchmarks at study-scale parameters.

use criterion::{criterion_group, criterion_main, Criterion};
use mamv_core::functions::TestFunction;
use mamv_core::geometry::ConvexDomain;
use mamv_core::operators::{self, MvConfig};
use mamv_core::solver::{solve_dirichlet, SolveParams};

fn bench_operators(c: &mut Criterion) {
    let cfg = MvConfig::default();
    let u_plus = TestFunction::u_plus(2);
    c.bench_function("mv_solid_restricted_smooth", |b| {
        b.iter(|| operators::mv_solid_restricted(&u_plus, &[0.3, 0.2], 0.1, &cfg).unwrap())
    });

    let cone = TestFunction::cone_shell(2);
    c.bench_function("mv_solid_restricted_kinked", |b| {
        b.iter(|| operators::mv_solid_restricted(&cone, &[1.0, 0.0], 0.05, &cfg).unwrap())
    });

    c.bench_function("mv_discrete", |b| {
        b.iter(|| operators::mv_discrete(&u_plus, &[0.3, 0.2], 0.1, &cfg).unwrap())
    });
}

fn bench_solver(c: &mut Criterion) {
    let square = ConvexDomain::rect(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let exact = |p: &[f64]| 0.5 * (p[0] * p[0] + p[1] * p[1]);
    let cfg = MvConfig::default();
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    group.bench_function("dirichlet_h0.05", |b| {
        b.iter(|| {
            let params = SolveParams {
                h: 0.05,
                eps: 0.2,
                tol: 1e-8,
                max_iter: 10_000,
            };
            solve_dirichlet(
                &square,
                &|_: &[f64]| 1.0,
                &exact,
                &params,
                &cfg,
                Some(&exact),
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(operators_and_solver, bench_operators, bench_solver);
criterion_main!(operators_and_solver);
