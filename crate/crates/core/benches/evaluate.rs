use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinperm::oracle::permanent_ryser_with;
use spinperm::{random_matrix, Execution, RandomKind, SpinOperator, Statistics};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn level_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("level_sweep");
    group.sample_size(10);
    for n in [12, 16, 20] {
        let m = random_matrix(n, 7, RandomKind::ComplexGaussian);
        let op = SpinOperator::breve(&m, Statistics::Bosonic).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &exec, |b, &exec| {
                b.iter(|| op.evaluate_with(exec))
            });
        }
    }
    group.finish();
}

fn ryser(c: &mut Criterion) {
    let mut group = c.benchmark_group("ryser");
    group.sample_size(10);
    for n in [12, 16, 20] {
        let m = random_matrix(n, 7, RandomKind::ComplexGaussian);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &exec, |b, &exec| {
                b.iter(|| permanent_ryser_with(&m, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, level_sweep, ryser);
criterion_main!(benches);
