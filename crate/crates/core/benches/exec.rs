// SPDX-License-Identifier: Apache-2.0

//! Data-parallel vs sequential execution of the join strategies.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use docjoin_core::exchange::ClusterTopology;
use docjoin_core::join::{execute_spec, JoinOptions, JoinSide, JoinSpec, Strategy};
use docjoin_core::par::Parallelism;
use docjoin_core::{Document, Filter, Snapshot, Store};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dataset(parents: usize, children: usize) -> Snapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let store = Store::new();
    store.create_index("P", 8, "k").unwrap();
    store.create_index("C", 8, "ck").unwrap();
    store.add_documents("P", (0..parents as i64).map(|k| Document::new().with("k", k))).unwrap();
    store
        .add_documents("C", (0..children).map(|_| Document::new().with("ck", rng.gen_range(0..parents as i64 * 2))))
        .unwrap();
    store.seal_all("P").unwrap();
    store.seal_all("C").unwrap();
    store.snapshot_all()
}

fn joins(c: &mut Criterion) {
    let snap = dataset(200_000, 200_000);
    let topo = ClusterTopology::new(4);
    let spec = JoinSpec::semi(JoinSide::new("P", Filter::all(), "k"), JoinSide::new("C", Filter::all(), "ck"));
    let mut g = c.benchmark_group("semi_join_200k");
    g.sample_size(10);
    for strategy in [Strategy::PartitionedHash, Strategy::BroadcastHash, Strategy::Routing] {
        for (label, parallelism) in [("parallel", Parallelism::Parallel), ("sequential", Parallelism::Sequential)] {
            let opts = JoinOptions { parallelism, ..JoinOptions::default() };
            g.bench_with_input(BenchmarkId::new(strategy.name(), label), &opts, |b, opts| {
                b.iter(|| execute_spec(&snap, &spec, strategy, &topo, opts).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, joins);
criterion_main!(benches);
