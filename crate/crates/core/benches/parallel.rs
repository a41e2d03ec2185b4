//! Sequential versus rayon execution of the hot kernels on the two-body
//! catalog grid (64 x 64).

use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use strichartz_lab::config::ScenarioConfig;
use strichartz_lab::exponent::{ClusterSpec, Exponent};
use strichartz_lab::norms::ClusterLattice;
use strichartz_lab::par::{self, Execution};
use strichartz_lab::propagator::{BackendConfig, TensorPropagator};

fn two_body() -> ScenarioConfig {
    ScenarioConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/two_body.json")).expect("catalog scenario")
}

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn bench(c: &mut Criterion) {
    let cfg = two_body();
    let model = cfg.model().unwrap();
    let u = cfg.initial_state(&model.grid).unwrap();
    let h = model.hamiltonian(0.0).unwrap();
    let tensor = TensorPropagator::new(&model.free_part(), BackendConfig::default()).unwrap();
    let lattice = ClusterLattice::new(&model.grid, &ClusterSpec::new(&[1, 2], 1).unwrap()).unwrap();

    let mut group = c.benchmark_group("two_body_64x64");
    for (name, mode) in modes() {
        par::set_execution(mode);
        group.bench_with_input(BenchmarkId::new("hamiltonian_apply", name), &u, |b, u| {
            b.iter(|| h.apply(u).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("hamiltonian_assemble", name), &model, |b, m| {
            b.iter(|| m.hamiltonian(0.3).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("tensor_free_step", name), &u, |b, u| {
            b.iter(|| tensor.apply(u, 0.5, 0.0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("mixed_norm_6_6", name), &u, |b, u| {
            b.iter(|| lattice.mixed_norm(u.data(), Exponent::int(6), Exponent::int(6)))
        });
    }
    group.finish();
    par::set_execution(Execution::Parallel);
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench
}
criterion_main!(benches);
