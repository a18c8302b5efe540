use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gensol_core::constructor::{construct_sequence, enumerate_dense, linear_schedule, ConstructOptions, DenseScheme};
use gensol_core::demos::lewy_operator;
use gensol_core::jet::{parse_pde, PdeOperator};
use gensol_core::range::{range_condition_check, SolveOptions};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let seq = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let par = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", seq), ("parallel", par)]
}

fn range(c: &mut Criterion) {
    let eikonal = parse_pde("vars: x, y\nunknowns: u\norder: 1\ndomain: (0,1),(0,1)\neq: u_x^2 + u_y^2 = 1 + x^2\n").unwrap();
    let laplace = parse_pde("vars: x, y\nunknowns: u\norder: 2\ndomain: (0,1),(0,1)\neq: u_xx + u_yy = 1 + x*y\n").unwrap();
    let cases: [(&str, &PdeOperator, u32); 2] = [("eikonal", &eikonal, 2), ("laplace", &laplace, 3)];
    let mut group = c.benchmark_group("range");
    group.sample_size(10);
    for (name, op, level) in cases {
        let points = enumerate_dense(op.domain(), DenseScheme::Dyadic, 16).unwrap();
        for (mode, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(name, mode), &points, |b, pts| {
                b.iter(|| pool.install(|| black_box(range_condition_check(op, pts, level, &SolveOptions::default()))))
            });
        }
    }
    group.finish();
}

fn construct(c: &mut Criterion) {
    let lewy = lewy_operator("x", "0").unwrap();
    let z = enumerate_dense(lewy.domain(), DenseScheme::Dyadic, 3).unwrap();
    let mut group = c.benchmark_group("construct");
    group.sample_size(10);
    for (mode, pool) in pools() {
        group.bench_function(BenchmarkId::new("lewy", mode), |b| {
            b.iter(|| {
                pool.install(|| black_box(construct_sequence(&lewy, &z, &linear_schedule(3), &ConstructOptions::default()).unwrap()))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, range, construct);
criterion_main!(benches);
