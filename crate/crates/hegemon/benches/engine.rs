//! Compares the solver under one worker thread against all cores.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hegemon::analytics::{
    build_special_world, phase_sweep, CaseSpec, SpecialCaseSpec, SweepAxis, SweepSpec,
};
use hegemon::equilibrium::solve_spne;
use hegemon::exec;

fn bench_solve(c: &mut Criterion) {
    let spec = SpecialCaseSpec { n: 31, case: CaseSpec::Symmetric { g: 0.5 } };
    let world = build_special_world(&spec).unwrap();
    let mut group = c.benchmark_group("solve_spne_n31");
    for threads in [Some(1), None] {
        let label = threads.map_or("all-cores".to_string(), |t| format!("{t}-thread"));
        group.bench_with_input(BenchmarkId::from_parameter(label), &threads, |b, &t| {
            b.iter(|| exec::with_threads(t, || solve_spne(&world).unwrap()).unwrap());
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let spec = SweepSpec {
        n: 13,
        case: CaseSpec::Symmetric { g: 0.0 },
        axis: SweepAxis::G { min: 0.0, max: 1.0, step: 0.05 },
    };
    let mut group = c.benchmark_group("phase_sweep_n13");
    group.sample_size(20);
    for threads in [Some(1), None] {
        let label = threads.map_or("all-cores".to_string(), |t| format!("{t}-thread"));
        group.bench_with_input(BenchmarkId::from_parameter(label), &threads, |b, &t| {
            b.iter(|| exec::with_threads(t, || phase_sweep(&spec).unwrap()).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_solve, bench_sweep);
criterion_main!(benches);
