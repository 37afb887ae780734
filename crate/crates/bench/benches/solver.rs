use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rothe_bench::{midpoint_iterate, problem, solved};
use rothe_core::diagnostics::{sup_convolution, viscosity_touch_test, TouchConfig};
use rothe_core::grid::assemble_residual;
use rothe_core::step_solver::pseudo_time_relaxation;
use rothe_core::{run_rothe, solve_step, RotheConfig, Scheme, SolverChoice, StepConfig};

fn residual(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_residual");
    for name in ["P2_pucci_1d", "P3_bellman_2d"] {
        let (p, seq) = solved(name, 0.1);
        let z = midpoint_iterate(&seq);
        let scheme = Scheme::monotone(p.grid);
        group.bench_function(name, |b| {
            b.iter(|| assemble_residual(p.operator.as_ref(), &scheme, &z, &z, 0.1, 0.5).unwrap())
        });
    }
    group.finish();
}

fn step_methods(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_step");
    let (p, seq) = solved("P3_bellman_2d", 0.1);
    let z = midpoint_iterate(&seq);
    let scheme = Scheme::monotone(p.grid);
    for (label, method) in [("policy_iteration", SolverChoice::PolicyIteration), ("newton", SolverChoice::Newton)] {
        let cfg = StepConfig {
            method,
            ..StepConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("P3", label), &cfg, |b, cfg| {
            b.iter(|| solve_step(p.operator.as_ref(), &scheme, &z, 0.1, 0.6, cfg, None).unwrap())
        });
    }
    let (p2, seq2) = solved("P2_pucci_1d", 0.1);
    let z2 = midpoint_iterate(&seq2);
    let scheme2 = Scheme::monotone(p2.grid);
    group.bench_function("P2/newton", |b| {
        b.iter(|| solve_step(p2.operator.as_ref(), &scheme2, &z2, 0.1, 0.6, &StepConfig::default(), None).unwrap())
    });
    group.sample_size(10);
    group.bench_function("P2/pseudo_time", |b| {
        b.iter(|| pseudo_time_relaxation(p2.operator.as_ref(), &scheme2, &z2, 0.1, 0.6, &StepConfig::default()).unwrap())
    });
    group.finish();
}

fn rothe_runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_rothe");
    group.sample_size(10);
    for name in ["P1_linear_1d", "P2_pucci_1d", "P3_bellman_2d"] {
        let p = problem(name);
        let scheme = Scheme::monotone(p.grid);
        group.bench_function(name, |b| {
            b.iter(|| run_rothe(p.operator.as_ref(), &scheme, 0.05, 1.0, &RotheConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn diagnostics(c: &mut Criterion) {
    let mut group = c.benchmark_group("diagnostics");
    group.sample_size(10);
    let (p, seq) = solved("P1_linear_1d", 0.0125);
    let z = midpoint_iterate(&seq);
    group.bench_function("sup_convolution_1d", |b| b.iter(|| sup_convolution(&z, 0.1)));
    let cfg = TouchConfig {
        trials: 50,
        ..TouchConfig::default()
    };
    group.bench_function("touch_test_50", |b| {
        b.iter(|| viscosity_touch_test(p.operator.as_ref(), &seq, &cfg))
    });
    group.finish();
}

criterion_group!(benches, residual, step_methods, rothe_runs, diagnostics);
criterion_main!(benches);
