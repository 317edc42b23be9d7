//! Spatial-query throughput: compiled hypernetwork field versus the
//! monolithic space-time network, forward and gradient.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use nifkit::nets::Model;
use nifkit::query::compile;
use nifkit_bench::{point_cloud, query_pair};

fn bench_query(c: &mut Criterion) {
    let n_points = 4096;
    let mut group = c.benchmark_group("spatial_query");
    group.throughput(Throughput::Elements(n_points as u64));
    for width in [36usize, 75, 150] {
        let (nif, mono) = query_pair(width, 7);
        let field = compile(&nif, &[0.25]).expect("compile");
        let points = point_cloud(n_points, 3, 11);
        let augmented = point_cloud(n_points, 4, 11);

        group.bench_with_input(BenchmarkId::new("compiled_forward", width), &width, |b, _| {
            b.iter(|| field.eval_points(&points).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("compiled_gradient", width), &width, |b, _| {
            b.iter(|| field.eval_gradient(&points).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("monolithic_forward", width), &width, |b, _| {
            b.iter(|| mono.forward(&augmented).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("monolithic_gradient", width), &width, |b, _| {
            b.iter(|| mono.input_gradient(&augmented).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_query);
criterion_main!(benches);
