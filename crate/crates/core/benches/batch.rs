//! Sequential versus rayon batch evaluation over independent simulation runs.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use scotsim::par;
use scotsim::routing::RoutingMode;
use scotsim::sim::{run, SimConfig};
use scotsim::topology::{evaluation_topology, ScotTopology};
use scotsim::workload::{generate_workload, Workload, WorkloadSpec};

fn batch(topo: &ScotTopology, n: u64) -> Vec<Workload> {
    let spec = WorkloadSpec {
        subscribers: 40,
        publishers: 4,
        notifications_per_publisher: 10,
        rate_npm: 600.0,
        selectivity: 0.05,
        range_predicate: false,
        barrier_ticks: 500,
        start_spread_ticks: 500,
        hrp: None,
    };
    (0..n)
        .map(|seed| generate_workload(&spec, topo, seed).unwrap())
        .collect()
}

fn ims(topo: &ScotTopology, w: &Workload) -> u64 {
    run(topo, RoutingMode::Dnr, w, &SimConfig::default(), &[])
        .unwrap()
        .total_ims()
}

fn bench(c: &mut Criterion) {
    let topo = evaluation_topology().build().unwrap();
    let mut group = c.benchmark_group("simulation batch");
    group.sample_size(10);
    for n in [8u64, 32] {
        let workloads = batch(&topo, n);
        group.bench_with_input(BenchmarkId::new("sequential", n), &workloads, |b, ws| {
            b.iter(|| black_box(par::map_sequential(ws, |w| ims(&topo, w))))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &workloads, |b, ws| {
            b.iter(|| black_box(par::map_parallel(ws, |w| ims(&topo, w))))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
