// SPDX-License-Identifier: Apache-2.0

//! Every applicable join strategy agrees with a nested-loop evaluation.

use std::collections::BTreeSet;

use docjoin_core::exchange::ClusterTopology;
use docjoin_core::join::{execute_spec, JoinKind, JoinOptions, JoinSide, JoinSpec, Strategy as Algo};
use docjoin_core::par::Parallelism;
use docjoin_core::{Bound, Clause, Document, FieldValue, Filter, GlobalDocId, Key, Scalar, Snapshot, Store};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    parent: Vec<(i64, Vec<i64>, i64)>,
    child: Vec<(i64, i64)>,
    parent_shards: usize,
    child_shards: usize,
    nodes: u32,
    lo: i64,
    multi_key: bool,
    inner: bool,
}

fn case() -> impl Strategy<Value = Case> {
    (
        prop::collection::vec((0..40i64, prop::collection::vec(0..40i64, 0..3), 0..10i64), 0..120),
        prop::collection::vec((0..40i64, 0..10i64), 0..120),
        1..5usize,
        1..5usize,
        1..5u32,
        0..10i64,
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(parent, child, parent_shards, child_shards, nodes, lo, multi_key, inner)| Case {
            parent,
            child,
            parent_shards,
            child_shards,
            nodes,
            lo,
            multi_key,
            inner,
        })
}

fn load(c: &Case) -> Snapshot {
    let store = Store::new();
    store.create_index("P", c.parent_shards, "k").unwrap();
    store.create_index("C", c.child_shards, "ck").unwrap();
    store
        .add_documents("P", c.parent.iter().map(|(k, m, w)| Document::new().with("k", *k).with("m", m.iter().copied().collect::<FieldValue>()).with("w", *w)))
        .unwrap();
    store.add_documents("C", c.child.iter().map(|(k, w)| Document::new().with("ck", *k).with("w", *w))).unwrap();
    store.seal_all("P").unwrap();
    store.seal_all("C").unwrap();
    store.snapshot_all()
}

fn keys(v: Option<&FieldValue>) -> BTreeSet<Key> {
    v.map(|fv| fv.values().iter().map(Key::from).collect()).unwrap_or_default()
}

type Rows = Vec<(GlobalDocId, GlobalDocId, Vec<Option<FieldValue>>)>;

/// Nested loop over materialized documents.
fn oracle(snap: &Snapshot, spec: &JoinSpec) -> (BTreeSet<GlobalDocId>, Rows) {
    let pv = snap.index("P").unwrap();
    let cv = snap.index("C").unwrap();
    let parents = snap.eval_filter("P", &spec.parent.filter).unwrap();
    let children = snap.eval_filter("C", &spec.child.filter).unwrap();
    let mut semi = BTreeSet::new();
    let mut rows = Vec::new();
    for p in parents.iter() {
        let pk = keys(pv.value_of(p, &spec.parent.key).unwrap());
        for c in children.iter() {
            let ck = keys(cv.value_of(c, &spec.child.key).unwrap());
            if !pk.is_disjoint(&ck) {
                semi.insert(p);
                let vals = spec.projection.iter().map(|f| cv.value_of(c, f).unwrap().cloned()).collect();
                rows.push((p, c, vals));
            }
        }
    }
    rows.sort_by_key(|r| (r.0, r.1));
    (semi, rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn strategies_match_nested_loop(c in case()) {
        let snap = load(&c);
        let topo = ClusterTopology::new(c.nodes);
        let key = if c.multi_key { "m" } else { "k" };
        let parent = JoinSide::new("P", Filter::all().and(Clause::range("w", Bound::Inclusive(c.lo as f64), Bound::Unbounded)), key);
        let child = JoinSide::new("C", Filter::all().and(Clause::range("w", Bound::Unbounded, Bound::Exclusive(8.0))), "ck");
        let spec = if c.inner { JoinSpec::inner(parent, child, vec!["w".into()]) } else { JoinSpec::semi(parent, child) };
        let (semi, rows) = oracle(&snap, &spec);
        prop_assert_eq!(snap.doc_count("C").unwrap(), c.child.len() as u64);
        for strategy in Algo::ALL {
            if strategy == Algo::Routing && c.multi_key {
                continue;
            }
            for parallelism in [Parallelism::Parallel, Parallelism::Sequential] {
                let opts = JoinOptions { parallelism, batch_capacity: 7, ..JoinOptions::default() };
                let (res, stats) = execute_spec(&snap, &spec, strategy, &topo, &opts).unwrap();
                prop_assert_eq!(stats.strategy, Some(strategy));
                match spec.kind {
                    JoinKind::Semi => {
                        let got: BTreeSet<_> = res.as_semi().unwrap().iter().collect();
                        prop_assert_eq!(&got, &semi, "{}", strategy);
                    }
                    JoinKind::Inner => {
                        let got: Rows = res.as_inner().unwrap().iter().map(|r| (r.parent, r.child, r.values.clone())).collect();
                        prop_assert_eq!(&got, &rows, "{}", strategy);
                    }
                }
            }
        }
    }
}

#[test]
fn routing_rejects_multivalued_key() {
    let c = Case { parent: vec![(1, vec![1, 2], 0)], child: vec![(1, 0)], parent_shards: 2, child_shards: 1, nodes: 2, lo: 0, multi_key: true, inner: false };
    let snap = load(&c);
    let spec = JoinSpec::semi(JoinSide::new("P", Filter::all(), "m"), JoinSide::new("C", Filter::all(), "ck"));
    assert!(execute_spec(&snap, &spec, Algo::Routing, &ClusterTopology::new(2), &JoinOptions::default()).is_err());
}

#[test]
fn text_keys_join() {
    let store = Store::new();
    store.create_index("P", 2, "k").unwrap();
    store.create_index("C", 3, "ck").unwrap();
    store.add_documents("P", ["a", "b", "c"].map(|k| Document::new().with("k", k))).unwrap();
    store.add_documents("C", ["b", "c", "c", "z"].map(|k| Document::new().with("ck", k))).unwrap();
    store.seal_all("P").unwrap();
    store.seal_all("C").unwrap();
    let snap = store.snapshot_all();
    let spec = JoinSpec::semi(JoinSide::new("P", Filter::all(), "k"), JoinSide::new("C", Filter::all(), "ck"));
    let topo = ClusterTopology::new(3);
    let want: Vec<Scalar> = vec!["b".into(), "c".into()];
    for s in Algo::ALL {
        let (res, _) = execute_spec(&snap, &spec, s, &topo, &JoinOptions::default()).unwrap();
        let ids: Vec<_> = res.as_semi().unwrap().iter().collect();
        let mut got: Vec<Scalar> = ids.iter().map(|&d| snap.index("P").unwrap().value_of(d, "k").unwrap().unwrap().first().unwrap().clone()).collect();
        got.sort_by(|a, b| a.try_cmp(b).unwrap());
        assert_eq!(got, want, "{s}");
    }
}
