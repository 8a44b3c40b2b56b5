use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rulemine::data::{discretize, BinEdges};
use rulemine::generation::generate_all;
use rulemine::selection::{select_signed, SelectionConfig};
use rulemine::synth::synthetic_dataset;
use rulemine::{Config, Executor};

fn workers_under_test() -> Vec<usize> {
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut w = vec![1, 2, 4, max];
    w.sort_unstable();
    w.dedup();
    w
}

fn bench_generation(c: &mut Criterion) {
    let ds = synthetic_dataset(120, 40, 12, 1).unwrap();
    let dd = discretize(&ds, &BinEdges::fit(&ds, 5).unwrap()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let mut group = c.benchmark_group("generate_all");
    group.sample_size(10);
    for workers in workers_under_test() {
        let gen = Config {
            workers,
            cov_min: 0.01,
            cache_dir: tmp.path().join(format!("w{workers}")),
            ..Config::default()
        }
        .generation();
        let label = if workers == 1 { "sequential" } else { "parallel" };
        group.bench_with_input(BenchmarkId::new(label, workers), &gen, |b, gen| {
            b.iter(|| generate_all(&dd, ds.y(), gen).unwrap())
        });
    }
    group.finish();
}

fn bench_selection(c: &mut Criterion) {
    let ds = synthetic_dataset(120, 40, 8, 2).unwrap();
    let dd = discretize(&ds, &BinEdges::fit(&ds, 5).unwrap()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Config {
        no_prune: true,
        cache_dir: tmp.path().to_path_buf(),
        ..Config::default()
    };
    let rules = generate_all(&dd, ds.y(), &cfg.generation()).unwrap().into_rules();
    let sel = SelectionConfig::new(0.5, cfg.objective).unwrap();
    let mut group = c.benchmark_group("select_signed");
    group.sample_size(10);
    for workers in workers_under_test() {
        let exec = Executor::new(workers).unwrap();
        let label = if exec.is_parallel() {
            "parallel"
        } else {
            "sequential"
        };
        group.bench_function(BenchmarkId::new(label, workers), |b| {
            b.iter(|| select_signed(&rules, &dd, &sel, &exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_generation, bench_selection);
criterion_main!(benches);
