//! Measures the rayon-backed data paths against a single-thread baseline. With the
//! default `parallel` feature the per-rung channel measurement and the search
//! restarts fan out across the thread pool; pinning the pool to one thread shows
//! the overhead floor. For the true no-rayon build, run
//! `cargo bench --no-default-features` and compare groups by name.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use thermoto::bath::{build_bath, enumerate_blocks, induced_channel, BathMode, BlockUnitary};
use thermoto::quasicycle::{conjecture_search, QuasiCycleSpec};
use thermoto::state::{Hamiltonian, InverseTemperature};

fn qubit_fixture() -> (
    Hamiltonian,
    thermoto::bath::BathSpec,
    thermoto::bath::EnergyBlockLayout,
    BlockUnitary,
) {
    let h = Hamiltonian::qubit(2.0_f64.ln()).unwrap();
    let beta = InverseTemperature::new(1.0).unwrap();
    let bath = build_bath(&h, beta, 8, BathMode::ExactGeometric { base: 7 }).unwrap();
    let layout = enumerate_blocks(&h, &bath).unwrap();
    let u = BlockUnitary::random(&layout, 42, false);
    (h, bath, layout, u)
}

fn cycle_fixture() -> (
    QuasiCycleSpec,
    thermoto::bath::BathSpec,
    thermoto::bath::EnergyBlockLayout,
) {
    let beta = InverseTemperature::new(1.0).unwrap();
    let spec = QuasiCycleSpec::exact(2.0 * 2.0_f64.ln(), 3.0 * 2.0_f64.ln(), beta).unwrap();
    let h = spec.hamiltonian();
    let bath = build_bath(&h, beta, 7, BathMode::ExactGeometric { base: 1 }).unwrap();
    let layout = enumerate_blocks(&h, &bath).unwrap();
    (spec, bath, layout)
}

fn bench_induced_channel(c: &mut Criterion) {
    let (h, bath, layout, u) = qubit_fixture();
    let mut group = c.benchmark_group("induced_channel");
    group.bench_function("default_pool", |b| {
        b.iter(|| induced_channel(black_box(&u), &layout, &bath, &h).unwrap())
    });
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function("one_thread", |b| {
            b.iter(|| pool.install(|| induced_channel(black_box(&u), &layout, &bath, &h).unwrap()))
        });
    }
    group.finish();
}

fn bench_search(c: &mut Criterion) {
    let (spec, bath, layout) = cycle_fixture();
    let mut group = c.benchmark_group("conjecture_search");
    group.sample_size(10);
    group.bench_function("default_pool", |b| {
        b.iter(|| conjecture_search(black_box(&spec), &layout, &bath, 200, 7).unwrap())
    });
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function("one_thread", |b| {
            b.iter(|| {
                pool.install(|| conjecture_search(black_box(&spec), &layout, &bath, 200, 7).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_induced_channel, bench_search);
criterion_main!(benches);
