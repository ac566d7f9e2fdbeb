use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dpc_core::sim::{simulate, SchemeConfig};
use dpc_core::verify::{run_suite, Suite, VerifyOptions};
use dpc_core::{ChannelParams, FadingSet};
use std::hint::black_box;

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let full = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut sizes = vec![1];
    if full > 1 {
        sizes.push(full);
    }
    sizes
        .into_iter()
        .map(|n| {
            let label = if n == 1 { "sequential".to_string() } else { format!("{n} threads") };
            (label, rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap())
        })
        .collect()
}

fn bench_simulate(c: &mut Criterion) {
    let params = ChannelParams::new(3.0, FadingSet::geometric_chain(3.0, 3).unwrap()).unwrap();
    let cfg = SchemeConfig::CostaTimeShare(Vec::new());
    let mut group = c.benchmark_group("simulate_262k");
    group.sample_size(20);
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&label), |b| {
            b.iter(|| pool.install(|| simulate(black_box(&params), &cfg, 1 << 18, 7).unwrap()))
        });
    }
    group.finish();
}

fn bench_gap_grid(c: &mut Criterion) {
    let opts = VerifyOptions {
        grid: 12,
        ..VerifyOptions::default()
    };
    let mut group = c.benchmark_group("gap2_grid_12");
    group.sample_size(20);
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&label), |b| {
            b.iter(|| pool.install(|| run_suite(Suite::Gap2, black_box(&opts)).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_simulate, bench_gap_grid);
criterion_main!(benches);
