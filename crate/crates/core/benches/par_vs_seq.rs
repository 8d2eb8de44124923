use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use orlicz_core::nfunction::NFunction;
use orlicz_core::norms::{luxemburg_norm, marcinkiewicz_norm};
use orlicz_core::solver::problem::dirac_problem;
use orlicz_core::solver::{run_problem, solve_approximate, OperatorSpec, SolveOptions};
use orlicz_core::{Exec, SampledField};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn wavy(n: usize) -> SampledField {
    SampledField::from_fn(2, n, 1.0, |x| (7.0 * x[0]).sin() * (3.0 * x[1]).cos() * 4.0).unwrap()
}

fn bench_norms(c: &mut Criterion) {
    let f = wavy(512);
    let b = NFunction::llogl();
    let phi = NFunction::power(2.0).unwrap();
    let mut group = c.benchmark_group("norms_512x512");
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new("luxemburg", name), &exec, |bch, &e| {
            bch.iter(|| luxemburg_norm(&b, black_box(&f), e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("marcinkiewicz", name), &exec, |bch, &e| {
            bch.iter(|| marcinkiewicz_norm(&phi, black_box(&f), e).unwrap())
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let op = OperatorSpec::potential(NFunction::power(3.0).unwrap()).unwrap();
    let f = SampledField::constant(2, 65, 1.0, 1.0).unwrap();
    let mut group = c.benchmark_group("p3_solve_65x65");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let opts = SolveOptions { exec, ..Default::default() };
        group.bench_function(name, |bch| bch.iter(|| solve_approximate(&op, black_box(&f), &opts).unwrap()));
    }
    group.finish();
}

fn bench_levels(c: &mut Criterion) {
    let spec = dirac_problem(2, 65, &[4.0, 8.0, 16.0]);
    let mut group = c.benchmark_group("dirac_pipeline_65x65");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(name, |bch| bch.iter(|| run_problem(black_box(&spec), Path::new("."), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_norms, bench_solve, bench_levels);
criterion_main!(benches);
