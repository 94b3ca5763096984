// SPDX-License-Identifier: Apache-2.0

//! Closed-loop benchmark runner.
//!
//! Each simulated user is a thread that keeps issuing a randomly chosen
//! query until every query has at least `min_samples` completed runs.
//! Percentiles use the nearest-rank method and are withheld below
//! [`MIN_REPORTED_SAMPLES`].

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use docjoin_core::cache::{CacheStats, SemanticCache};
use docjoin_core::exchange::ClusterTopology;
use docjoin_core::planner::{ExecConfig, Executor, LogicalPlan, Trace};
use docjoin_core::querylang::{lower_to_plan, parse_query, Catalog, Params, QueryEngine};
use docjoin_core::Snapshot;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const MIN_REPORTED_SAMPLES: usize = 100;

#[derive(Debug, Clone)]
pub enum BenchQuery {
    /// One plan drawn uniformly per run.
    Plans { name: String, plans: Vec<LogicalPlan> },
    /// Query text; each parameter in `pools` is drawn uniformly per run,
    /// the rest come from `params`.
    Text { name: String, text: String, params: Params, pools: BTreeMap<String, Vec<String>> },
}

impl BenchQuery {
    pub fn name(&self) -> &str {
        match self {
            BenchQuery::Plans { name, .. } | BenchQuery::Text { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub users: usize,
    pub min_samples: usize,
    pub seed: u64,
    pub exec: ExecConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { users: 1, min_samples: MIN_REPORTED_SAMPLES, seed: 1, exec: ExecConfig::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryReport {
    pub name: String,
    pub runs: usize,
    pub errors: usize,
    /// First error message seen, if any.
    pub first_error: Option<String>,
    pub p50_us: Option<u64>,
    pub p90_us: Option<u64>,
    pub p99_us: Option<u64>,
    /// Stage strategy counts over all runs.
    pub strategies: BTreeMap<String, u64>,
    pub bytes: u64,
    /// Mean rows per run.
    pub mean_rows: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub users: usize,
    pub planner: docjoin_core::planner::PlannerMode,
    pub cache_mode: docjoin_core::cache::CacheMode,
    pub queries: Vec<QueryReport>,
    /// Counter deltas over the run; `entries` and `bytes` are end values.
    pub cache: CacheStats,
    pub wall_ms: u64,
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[u64], p: f64) -> Option<u64> {
    if sorted.len() < MIN_REPORTED_SAMPLES {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

#[derive(Default)]
struct Acc {
    samples: Vec<u64>,
    errors: usize,
    first_error: Option<String>,
    strategies: BTreeMap<String, u64>,
    bytes: u64,
    rows: u64,
    /// Runs handed out, including ones still executing.
    claimed: usize,
}

fn record_trace(acc: &mut Acc, t: &Trace) {
    for s in &t.stages {
        if let Some(st) = s.strategy {
            *acc.strategies.entry(st.name().to_string()).or_default() += 1;
        }
    }
    acc.bytes += t.bytes();
}

fn delta(before: CacheStats, after: CacheStats) -> CacheStats {
    CacheStats {
        hits: after.hits - before.hits,
        misses: after.misses - before.misses,
        evictions: after.evictions - before.evictions,
        stale_purges: after.stale_purges - before.stale_purges,
        oversize_skips: after.oversize_skips - before.oversize_skips,
        semi_joins_computed: after.semi_joins_computed - before.semi_joins_computed,
        entries: after.entries,
        bytes: after.bytes,
    }
}

struct Outcome {
    rows: usize,
    trace: Option<Trace>,
}

fn run_once(
    q: &BenchQuery,
    rng: &mut ChaCha8Rng,
    snapshot: &Snapshot,
    topology: &ClusterTopology,
    cache: &SemanticCache,
    catalog: Option<&Catalog>,
    exec: &ExecConfig,
) -> Result<Outcome, String> {
    match q {
        BenchQuery::Plans { plans, .. } => {
            let plan = plans.choose(rng).ok_or("no plans")?;
            let out = Executor::new(snapshot, topology, Some(cache), exec.clone()).run(std::slice::from_ref(plan)).map_err(|e| e.to_string())?;
            Ok(Outcome { rows: out.results[0].rows.len(), trace: Some(out.trace) })
        }
        BenchQuery::Text { text, params, pools, .. } => {
            let catalog = catalog.ok_or("the dataset has no query catalog")?;
            let mut p = params.clone();
            for (k, pool) in pools {
                if let Some(v) = pool.choose(rng) {
                    p.insert(k.clone(), v.clone());
                }
            }
            let lowered = parse_query(text).and_then(|ast| lower_to_plan(&ast, catalog, &p)).map_err(|e| e.to_string())?;
            let res = QueryEngine::new(snapshot, topology, Some(cache), exec.clone()).execute(&lowered).map_err(|e| e.to_string())?;
            Ok(Outcome { rows: res.rows.len(), trace: res.batch.map(|b| b.trace) })
        }
    }
}

pub fn run_benchmark(
    snapshot: &Snapshot,
    topology: &ClusterTopology,
    cache: &SemanticCache,
    catalog: Option<&Catalog>,
    queries: &[BenchQuery],
    cfg: &BenchConfig,
) -> BenchReport {
    let before = cache.stats();
    let started = Instant::now();
    let accs: Vec<Mutex<Acc>> = queries.iter().map(|_| Mutex::new(Acc::default())).collect();
    std::thread::scope(|s| {
        for user in 0..cfg.users.max(1) {
            let accs = &accs;
            s.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (user as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                loop {
                    // queries still short of their quota
                    let open: Vec<usize> = (0..queries.len())
                        .filter(|&i| {
                            let mut a = accs[i].lock().unwrap();
                            let need = a.claimed < cfg.min_samples;
                            if need {
                                a.claimed += 1;
                                // released again below if not picked
                            }
                            need
                        })
                        .collect();
                    if open.is_empty() {
                        return;
                    }
                    let pick = open[rng.gen_range(0..open.len())];
                    for &i in open.iter().filter(|&&i| i != pick) {
                        accs[i].lock().unwrap().claimed -= 1;
                    }
                    let t0 = Instant::now();
                    let res = run_once(&queries[pick], &mut rng, snapshot, topology, cache, catalog, &cfg.exec);
                    let us = t0.elapsed().as_micros() as u64;
                    let mut a = accs[pick].lock().unwrap();
                    match res {
                        Ok(o) => {
                            a.samples.push(us);
                            a.rows += o.rows as u64;
                            if let Some(t) = &o.trace {
                                record_trace(&mut a, t);
                            }
                        }
                        Err(e) => {
                            // failures are recorded and the quota still advances
                            a.errors += 1;
                            a.first_error.get_or_insert(e);
                        }
                    }
                }
            });
        }
    });
    let reports = queries
        .iter()
        .zip(accs)
        .map(|(q, a)| {
            let mut a = a.into_inner().unwrap();
            a.samples.sort_unstable();
            let runs = a.samples.len();
            QueryReport {
                name: q.name().to_string(),
                runs,
                errors: a.errors,
                first_error: a.first_error,
                p50_us: percentile(&a.samples, 50.0),
                p90_us: percentile(&a.samples, 90.0),
                p99_us: percentile(&a.samples, 99.0),
                strategies: a.strategies,
                bytes: a.bytes,
                mean_rows: if runs == 0 { 0.0 } else { a.rows as f64 / runs as f64 },
            }
        })
        .collect();
    BenchReport {
        users: cfg.users.max(1),
        planner: cfg.exec.mode,
        cache_mode: cfg.exec.cache_mode,
        queries: reports,
        cache: delta(before, cache.stats()),
        wall_ms: started.elapsed().as_millis() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let s: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&s, 90.0), Some(90));
        assert_eq!(percentile(&s, 50.0), Some(50));
        assert_eq!(percentile(&s, 99.0), Some(99));
        let s: Vec<u64> = (1..=200).collect();
        assert_eq!(percentile(&s, 90.0), Some(180));
        assert_eq!(percentile(&s[..99], 50.0), None);
    }
}
