//! Criterion benchmarks for the hot kernels: series arithmetic, the
//! local recursion, membership checking, and symbolic calculus.

use criterion::{criterion_group, criterion_main, Criterion};
use foamck_core::expr;
use foamck_core::geom::MultiIndex;
use foamck_core::nets::{check_i_membership, example_one_net, CheckConfig, RadiusSchedule};
use foamck_core::series::ck::{ck_solve_local, InitialData, PdeSystem};
use foamck_core::series::expr_to_series;
use foamck_core::sets::{DenseCheckCfg, SingPrimitive, SingularitySet};
use foamck_core::DomainBox;
use std::hint::black_box;

fn series_mul(c: &mut Criterion) {
    let e = expr::mul(
        &expr::sin(&expr::add(&expr::t(), &expr::y(1))),
        &expr::exp(&expr::mul(&expr::constant(0.3), &expr::y(1))),
    );
    let a = expr_to_series(&e, &[0.1, 0.2], 12).unwrap();
    let b = a.derive(&MultiIndex(vec![1, 0]));
    c.bench_function("series_mul_dim2_order12", |bench| {
        bench.iter(|| black_box(a.mul(black_box(&b)).unwrap()))
    });
}

fn ck_local(c: &mut Criterion) {
    let dom = DomainBox::new(&[(0.0, 4.0), (0.0, 6.28)]).unwrap();
    let pde = PdeSystem::new(
        1,
        expr::mul(&expr::var(2), &expr::var(2)),
        vec![(0, MultiIndex(vec![0]))],
        dom,
        0.0,
    )
    .unwrap();
    let data = InitialData {
        g: vec![expr::div(
            &expr::constant(1.0),
            &expr::add(&expr::constant(2.0), &expr::sin(&expr::y(1))),
        )],
        t0: 0.0,
    };
    c.bench_function("ck_solve_riccati_dim2_order12", |bench| {
        bench.iter(|| black_box(ck_solve_local(&pde, &data, &[0.0, 3.0], 12).unwrap()))
    });
}

fn membership(c: &mut Criterion) {
    let dom = DomainBox::line(0.0, 1.0).unwrap();
    let sigma = SingularitySet::nowhere_dense(
        &dom,
        vec![
            SingPrimitive::Point(vec![0.25]),
            SingPrimitive::Point(vec![0.5]),
            SingPrimitive::Point(vec![0.75]),
        ],
        &DenseCheckCfg::at_resolution(0.05),
    )
    .unwrap();
    let (_poset, net, family) =
        example_one_net(&sigma, &dom, RadiusSchedule { initial: 0.25, ratio: 0.5 }, 16).unwrap();
    let cfg = CheckConfig::default();
    let samples: Vec<Vec<f64>> = (1..=20).map(|k| vec![0.011 + 0.047 * k as f64]).collect();
    c.bench_function("check_i_example_one_20_samples", |bench| {
        bench.iter(|| {
            black_box(check_i_membership(&net, &sigma, &family, &samples, &cfg).unwrap())
        })
    });
}

fn calculus(c: &mut Criterion) {
    let e = expr::div(
        &expr::sin(&expr::mul(&expr::t(), &expr::y(1))),
        &expr::add(&expr::constant(2.0), &expr::cos(&expr::y(1))),
    );
    let p = MultiIndex(vec![1, 1]);
    c.bench_function("differentiate_and_evaluate", |bench| {
        bench.iter(|| {
            let d = e.differentiate(black_box(&p));
            black_box(d.evaluate(&[0.3, 0.7]).unwrap())
        })
    });
}

criterion_group!(benches, series_mul, ck_local, membership, calculus);
criterion_main!(benches);
