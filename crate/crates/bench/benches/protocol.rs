use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mupir_bench::{fixture, rng};
use mupir_core::adversary::{infer_cross_user, SingletonCatalog};
use mupir_core::simnet::{observed_sets, run_retrieval, RoutingPolicy, RoutingTable};
use mupir_core::{generate_plan, SystemConfig};

const SIZES: [(usize, usize); 4] = [(2, 2), (2, 4), (3, 3), (4, 3)];

fn plans(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_plan");
    for (k, s) in SIZES {
        let (config, _) = fixture(k, s, 1);
        let mut r = rng(2);
        group.bench_with_input(BenchmarkId::from_parameter(format!("K{k}_S{s}")), &config, |b, cfg| {
            b.iter(|| generate_plan(cfg, 0, &mut r).unwrap())
        });
    }
    group.finish();
}

fn retrieval(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_retrieval");
    for (k, s) in SIZES {
        let (config, messages) = fixture(k, s, 1);
        let mut seed = 0u64;
        group.bench_function(BenchmarkId::from_parameter(format!("K{k}_S{s}")), |b| {
            b.iter(|| {
                seed += 1;
                run_retrieval(&config, k - 1, &messages, seed, &RoutingPolicy::Uniform).unwrap()
            })
        });
    }
    group.finish();
}

fn cross_user(c: &mut Criterion) {
    let mut group = c.benchmark_group("infer_cross_user");
    for s in [2, 4, 6, 8] {
        let config = SystemConfig::new(2, 1, s).unwrap();
        let (_, messages) = fixture(2, s, 3);
        let table = RoutingTable::all_helpers_to(&config, 0).unwrap();
        let transcript = run_retrieval(&config, 0, &messages, 4, &RoutingPolicy::Fixed(table)).unwrap();
        let sets = observed_sets(&transcript, 0);
        let catalog = SingletonCatalog::for_config(&config).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("S{s}")), &sets, |b, sets| {
            b.iter(|| infer_cross_user(sets, &catalog).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, plans, retrieval, cross_user);
criterion_main!(benches);
