//! Hot kernels on the default rayon pool against a one-thread pool.
//!
//! The one-thread pool runs the same code path as a build without the
//! `parallel` feature, so the two series isolate the cost of scheduling.
//! Build with `--no-default-features` to time the plain loops.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cpe_core::diagnostics::diagnose;
use cpe_core::initial::smooth_random;
use cpe_core::integrators::{rk4_step, stable_dt};
use cpe_core::spectral::Channel;
use cpe_core::tendencies::{regularized_tendency, FaultFloors};
use cpe_core::{Grid, PhysParams, State};

fn state(n: usize) -> State {
    smooth_random(Grid::cube(n).unwrap(), 0.3, 2, 1, 0.5, 0.5).unwrap()
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let mut v = vec![("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap())];
    if cpe_core::par::is_parallel() {
        v.push(("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()));
    }
    v
}

fn kernels(c: &mut Criterion) {
    let params = PhysParams::standard().with_epsilon(1e-3).unwrap();
    let pools = pools();
    for n in [16, 24] {
        let u = state(n);
        let channel = Channel::get(u.grid());
        let dt = stable_dt(&u, &params).unwrap();

        let mut g = c.benchmark_group(format!("transform/{n}"));
        for (name, pool) in &pools {
            g.bench_function(BenchmarkId::from_parameter(name), |b| {
                pool.install(|| b.iter(|| channel.inverse(&channel.forward(black_box(&u.sigma)))))
            });
        }
        g.finish();

        let mut g = c.benchmark_group(format!("diagnose/{n}"));
        for (name, pool) in &pools {
            g.bench_function(BenchmarkId::from_parameter(name), |b| {
                pool.install(|| b.iter(|| diagnose(black_box(&u), &params).unwrap()))
            });
        }
        g.finish();

        let mut g = c.benchmark_group(format!("tendency/{n}"));
        for (name, pool) in &pools {
            g.bench_function(BenchmarkId::from_parameter(name), |b| {
                pool.install(|| b.iter(|| regularized_tendency(black_box(&u), &params).unwrap()))
            });
        }
        g.finish();

        let mut g = c.benchmark_group(format!("rk4_step/{n}"));
        g.sample_size(10);
        for (name, pool) in &pools {
            g.bench_function(BenchmarkId::from_parameter(name), |b| {
                pool.install(|| b.iter(|| rk4_step(black_box(&u), 0.0, dt, &params, FaultFloors::default(), &mut |_| Ok(None), &mut |_| {}).unwrap()))
            });
        }
        g.finish();
    }
}

criterion_group!(benches, kernels);
criterion_main!(benches);
