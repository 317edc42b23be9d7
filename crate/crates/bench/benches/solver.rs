//! Spectral solver step cost at the production grid size.

use criterion::{criterion_group, criterion_main, Criterion};
use nifkit::datagen::{solve_ks, KsConfig};

fn bench_solver(c: &mut Criterion) {
    let cfg = KsConfig {
        n_grid: 1024,
        dt: 1e-3,
        t_final: 0.1, // 100 steps per iteration
        save_every: 100,
        subsample_space: 4,
        subsample_time: 1,
        dealias: true,
    };
    let u0: Vec<f64> = cfg.grid().iter().map(|&x| x.sin()).collect();
    c.bench_function("ks_100_steps_n1024", |b| {
        b.iter(|| solve_ks(0.2, &cfg, &u0).unwrap())
    });
}

criterion_group!(benches, bench_solver);
criterion_main!(benches);
