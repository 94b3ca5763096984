// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use docjoin_core::cache::{CacheMode, SemanticCache};
use docjoin_core::exchange::ClusterTopology;
use docjoin_core::planner::ExecConfig;
use docjoin_core::querylang::workload::SUPPORTED;
use docjoin_core::querylang::{lower_to_plan, parse_query, Catalog, Lowered, QueryEngine};
use docjoin_core::{GlobalDocId, Store};
use docjoin_harness::bench::{run_benchmark, BenchConfig, BenchQuery, MIN_REPORTED_SAMPLES};
use docjoin_harness::cdr::{gen_cdr, CdrConfig, CdrQuery};
use docjoin_harness::finbench::{gen_finbench, FinbenchConfig};
use docjoin_harness::oracle::{eval_pattern, sorted_rows, spec_paths};

fn fin(seed: u64) -> (docjoin_harness::finbench::FinbenchDataset, Store) {
    let d = gen_finbench(&FinbenchConfig::minimal(seed)).unwrap();
    let store = Store::new();
    d.sections.load(&store).unwrap();
    (d, store)
}

fn text_queries(d: &docjoin_harness::finbench::FinbenchDataset) -> Vec<BenchQuery> {
    SUPPORTED
        .iter()
        .map(|(name, text)| BenchQuery::Text { name: name.to_string(), text: text.to_string(), params: d.params.clone(), pools: Default::default() })
        .collect()
}

#[test]
fn planted_motifs_hold_across_seeds() {
    let catalog = Catalog::finbench_mini();
    for seed in 20..26 {
        let (d, store) = fin(seed);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(1 + seed as u32 % 5);
        for (name, text) in SUPPORTED {
            let ast = parse_query(text).unwrap();
            let lowered = lower_to_plan(&ast, &catalog, &d.params).unwrap();
            let res = QueryEngine::new(&snap, &topo, None, ExecConfig::default()).execute(&lowered).unwrap();
            assert!(!res.rows.is_empty(), "seed {seed} {name}");
            match &lowered {
                Lowered::Plan(_) => {
                    let want = eval_pattern(&ast, &catalog, &d.params, &d.sections).unwrap();
                    assert_eq!(sorted_rows(res.rows.clone()), want, "seed {seed} {name}");
                }
                Lowered::Paths(p) => {
                    let (len, want) = spec_paths(&snap, &p.spec);
                    let got: BTreeSet<Vec<GlobalDocId>> = res.paths.as_ref().unwrap().paths.iter().map(|p| p.docs.clone()).collect();
                    assert_eq!(res.paths.as_ref().unwrap().length, len, "seed {seed} {name}");
                    assert_eq!(got, want, "seed {seed} {name}");
                }
            }
        }
    }
}

#[test]
fn bench_collects_enough_samples() {
    let (d, store) = fin(1);
    let snap = store.snapshot_all();
    let topo = ClusterTopology::new(4);
    let cache = SemanticCache::new(64 << 20);
    let catalog = Catalog::finbench_mini();
    let cfg = BenchConfig { users: 3, ..BenchConfig::default() };
    let report = run_benchmark(&snap, &topo, &cache, Some(&catalog), &text_queries(&d), &cfg);
    assert_eq!(report.queries.len(), 8);
    for q in &report.queries {
        assert_eq!(q.errors, 0, "{}: {:?}", q.name, q.first_error);
        assert!(q.runs >= MIN_REPORTED_SAMPLES, "{} ran {} times", q.name, q.runs);
        let (p50, p90, p99) = (q.p50_us.unwrap(), q.p90_us.unwrap(), q.p99_us.unwrap());
        assert!(p50 <= p90 && p90 <= p99, "{}", q.name);
        assert!(q.mean_rows >= 1.0, "{}", q.name);
    }
    // repeated identical queries hit the cache
    assert!(report.cache.hits > 0);
}

#[test]
fn bench_withholds_percentiles_below_the_floor() {
    let (d, store) = fin(1);
    let snap = store.snapshot_all();
    let cache = SemanticCache::new(64 << 20);
    let cfg = BenchConfig { min_samples: 10, ..BenchConfig::default() };
    let report = run_benchmark(&snap, &ClusterTopology::new(2), &cache, Some(&Catalog::finbench_mini()), &text_queries(&d)[..1], &cfg);
    assert_eq!(report.queries[0].runs, 10);
    assert_eq!(report.queries[0].p90_us, None);
}

#[test]
fn bypass_never_hits() {
    let (d, store) = fin(2);
    let snap = store.snapshot_all();
    let cache = SemanticCache::new(64 << 20);
    let exec = ExecConfig { cache_mode: CacheMode::Bypass, ..ExecConfig::default() };
    let cfg = BenchConfig { users: 2, exec, ..BenchConfig::default() };
    let report = run_benchmark(&snap, &ClusterTopology::new(3), &cache, Some(&Catalog::finbench_mini()), &text_queries(&d), &cfg);
    assert_eq!(report.cache.hits, 0);
    assert_eq!(report.cache.entries, 0);
    assert!(report.queries.iter().all(|q| q.errors == 0));
}

#[test]
fn cdr_plans_run_in_the_bench() {
    let cfg = CdrConfig { docs_per_day: 500, ..CdrConfig::query_shapes(5) };
    let data = gen_cdr(&cfg).unwrap();
    let store = Store::new();
    data.sections.load(&store).unwrap();
    let snap = store.snapshot_all();
    let phones: Vec<i64> = data.phones.iter().copied().take(5).collect();
    let queries: Vec<BenchQuery> = CdrQuery::ALL
        .iter()
        .map(|q| BenchQuery::Plans { name: format!("{q:?}"), plans: phones.iter().map(|&p| q.plan(p)).collect() })
        .collect();
    let cache = SemanticCache::new(64 << 20);
    let exec = ExecConfig { planner: cfg.planner_config(), ..ExecConfig::default() };
    let report = run_benchmark(&snap, &ClusterTopology::new(4), &cache, None, &queries, &BenchConfig { exec, ..BenchConfig::default() });
    for q in &report.queries {
        assert_eq!(q.errors, 0, "{}: {:?}", q.name, q.first_error);
        assert!(q.runs >= MIN_REPORTED_SAMPLES);
        assert!(!q.strategies.is_empty(), "{}", q.name);
    }
}

#[test]
fn datasets_are_reproducible() {
    let a = gen_finbench(&FinbenchConfig::minimal(9)).unwrap();
    let b = gen_finbench(&FinbenchConfig::minimal(9)).unwrap();
    assert_eq!(a.sections.content_hash(), b.sections.content_hash());
    assert_eq!(a.params, b.params);
    let c = CdrConfig { docs_per_day: 200, ..CdrConfig::query_shapes(9) };
    assert_eq!(gen_cdr(&c).unwrap().sections.content_hash(), gen_cdr(&c).unwrap().sections.content_hash());
}
