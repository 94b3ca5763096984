// SPDX-License-Identifier: Apache-2.0

//! Plain-text rendering of an executed batch. Timings are left out so the
//! text is stable across runs.

use std::fmt::Write;

use crate::cache::CacheStats;

use super::exec::{BatchOutput, CacheOutcome, StageTrace};
use super::plan::StageKind;

fn est(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.1}"),
        None => "-".into(),
    }
}

fn act(v: Option<u64>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn cache_word(c: CacheOutcome) -> &'static str {
    match c {
        CacheOutcome::Hit => "hit",
        CacheOutcome::Miss => "miss",
        CacheOutcome::Bypass => "bypass",
        CacheOutcome::Off => "off",
        CacheOutcome::NotCacheable => "n/a",
    }
}

fn stage_line(out: &mut String, t: &StageTrace, kind: StageKind) {
    let deps = t.deps.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let _ = write!(out, "stage {} [{}] deps={{{deps}}}", t.id, t.label);
    if let Some(rep) = t.folded_into {
        let _ = writeln!(out, " folded-into={rep}");
        return;
    }
    match kind {
        StageKind::Combine(_) => {
            let _ = writeln!(out, " combine output={}", t.output);
        }
        StageKind::Edge(_) => {
            let strategy = t.strategy.map_or("-", |s| s.name());
            let _ = write!(
                out,
                " strategy={strategy} parent(est={} actual={}) child(est={} actual={}) output={} cache={}",
                est(t.parent_estimate),
                act(t.parent_actual),
                est(t.child_estimate),
                act(t.child_actual),
                t.output,
                cache_word(t.cache),
            );
            if t.short_circuit {
                out.push_str(" short-circuit");
            }
            if let Some(j) = &t.join {
                let _ = write!(out, " bytes={} live={}", j.bytes, j.live_tuples());
            }
            out.push('\n');
        }
    }
}

/// Stage table, fold groups, counters and (optionally) cache statistics.
pub fn explain(batch: &BatchOutput, cache: Option<CacheStats>) -> String {
    let mut out = String::new();
    let trace = &batch.trace;
    let _ = writeln!(out, "planner: {}", serde_json::to_value(trace.mode).unwrap().as_str().unwrap_or("?"));
    for (i, r) in batch.plan.graph.root_stages.iter().enumerate() {
        let _ = writeln!(out, "plan {i}: root stage {r} -> {} docs", batch.results[i].docs.len());
    }
    for t in &trace.stages {
        stage_line(&mut out, t, batch.plan.graph.stage(t.id).kind);
    }
    if trace.fold.is_empty() {
        out.push_str("folding: none\n");
    }
    for g in &trace.fold.groups {
        let ids = g.stages.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let _ = writeln!(out, "folded {{{ids}}} -> {} : {}", g.representative, g.canonical);
    }
    let c = &trace.counters;
    let _ = writeln!(
        out,
        "counters: stages={} semi={} inner={} cache_hits={} short_circuits={}",
        c.stages_executed, c.semi_joins_computed, c.inner_joins_computed, c.cache_hits, c.short_circuits
    );
    if let Some(s) = cache {
        let _ = writeln!(
            out,
            "cache: entries={} bytes={} hits={} misses={} evictions={} stale={}",
            s.entries, s.bytes, s.hits, s.misses, s.evictions, s.stale_purges
        );
    }
    out
}
