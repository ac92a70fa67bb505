use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use xorcert::certify::{certify, representation, CertifyOptions, Solver};
use xorcert::oracle::{brute_force_max_sat_with, verify_claim2, verify_theorem13, DEFAULT_ENUM_BUDGET};
use xorcert::repmatrix::{TypeSymOperator, DEFAULT_NNZ_BUDGET};
use xorcert::spectral::LinearOperator;
use xorcert::sweep::{run_sweep, Density, SweepConfig};
use xorcert::{generate_random, Execution};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn brute_force(c: &mut Criterion) {
    let inst = generate_random(20, 4, 2e-4, 1).unwrap();
    let mut g = c.benchmark_group("brute_force_n20");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| brute_force_max_sat_with(black_box(&inst), exec).unwrap()));
    }
    g.finish();
}

fn operator_apply(c: &mut Criterion) {
    let inst = generate_random(12, 4, 0.002, 2).unwrap();
    let r = representation(&inst, 2, DEFAULT_NNZ_BUDGET).unwrap().rescale().unwrap();
    let mut g = c.benchmark_group("type_operator_apply");
    for (name, exec) in MODES {
        let op = TypeSymOperator::new(&r, exec).unwrap();
        let v: Vec<f64> = (0..op.dim()).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect();
        let mut out = vec![0.0; op.dim()];
        g.bench_with_input(BenchmarkId::new(name, op.dim()), &v, |b, v| b.iter(|| op.apply(black_box(v), &mut out)));
    }
    g.finish();
}

fn iterative_certify(c: &mut Criterion) {
    let inst = generate_random(10, 4, 0.004, 3).unwrap();
    let mut g = c.benchmark_group("certify_iterative_n10_d2");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = CertifyOptions {
            solver: Solver::Iterative,
            exec,
            ..Default::default()
        };
        g.bench_function(name, |b| b.iter(|| certify(black_box(&inst), 2, &opts).unwrap()));
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("trace_moment_monte_carlo");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| verify_theorem13(3, 2, 1, 1, 1.0 / 3.0, 500, 7, exec).unwrap()));
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("claim2_enumeration");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| verify_claim2(2, 2, 2, 2, DEFAULT_ENUM_BUDGET, exec).unwrap()));
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweep_rows");
    g.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = SweepConfig::new(8, 4, 1, vec![Density::P(0.05), Density::P(0.1)], 8, 1);
        cfg.certify.exec = exec;
        g.bench_function(name, |b| b.iter(|| run_sweep(black_box(&cfg)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, brute_force, operator_apply, iterative_certify, monte_carlo, enumeration, sweep);
criterion_main!(benches);
