use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use treerisk_core::simulator::{self, PathCountSampler};
use treerisk_core::special::gamma_q;
use treerisk_core::verifier::EdgeStateEnumeration;
use treerisk_core::{local_loss_moments, ArrivalProcess, SimConfig, SimMode};
use treerisk_bench::reference_model;

fn survival(c: &mut Criterion) {
    let mut group = c.benchmark_group("gamma_q");
    for shape in [0.5, 5.0, 40.0] {
        group.bench_with_input(BenchmarkId::from_parameter(shape), &shape, |b, &a| {
            b.iter(|| (1..=64).map(|i| gamma_q(black_box(a), i as f64 * 0.75)).sum::<f64>())
        });
    }
    group.finish();
}

fn closed_forms(c: &mut Criterion) {
    let model = reference_model(3.0, 7);
    c.bench_function("local_loss_moments k=1..10", |b| {
        b.iter(|| {
            (1..=10)
                .map(|k| local_loss_moments(&model, model.scenario(0, k).unwrap()).unwrap().mean)
                .sum::<f64>()
        })
    });
}

fn simulation(c: &mut Criterion) {
    let model = reference_model(4.0, 7);
    let scenario = model.scenario(0, 5).unwrap();
    let arrivals = ArrivalProcess::new(1.5, 1.0).unwrap();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    for mode in [SimMode::IndependentPaths, SimMode::SharedEdges] {
        let cfg = SimConfig::new(10_000, mode, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("path_count", format!("{mode:?}")), &cfg, |b, cfg| {
            b.iter(|| simulator::simulate_path_count(&model, scenario, cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("aggregate", format!("{mode:?}")), &cfg, |b, cfg| {
            b.iter(|| simulator::simulate_aggregate_loss(&model, scenario, arrivals, cfg).unwrap())
        });
    }
    let sampler = PathCountSampler::from_hop_probabilities(2, vec![0.9; 11], SimMode::SharedEdges).unwrap();
    let cfg = SimConfig::new(2_000, SimMode::SharedEdges, 1).unwrap();
    group.bench_function("shared_edges k=10 dense", |b| {
        b.iter(|| simulator::simulate_counts(&sampler, &cfg).unwrap())
    });
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    let e = EdgeStateEnumeration::new(2, vec![0.8, 0.6, 0.5, 0.4]).unwrap();
    let mut group = c.benchmark_group("enumeration");
    group.sample_size(10);
    group.bench_function("shared law rho=2 k=3 (15 vars)", |b| {
        b.iter(|| e.exact_path_count_law(SimMode::SharedEdges))
    });
    group.finish();
}

criterion_group!(benches, survival, closed_forms, simulation, enumeration);
criterion_main!(benches);
