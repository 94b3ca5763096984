// SPDX-License-Identifier: Apache-2.0

//! Cardinality estimates and the strategy cost model.

use std::collections::HashMap;

use serde::Serialize;

use crate::filter::{Clause, Filter};
use crate::join::{JoinKind, Strategy};
use crate::storage::{IndexView, Snapshot};

use super::plan::ScanNode;
use super::PlannerError;

/// Strategy thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlannerConfig {
    /// Largest child set shipped for index lookups.
    pub tau_idx: f64,
    /// Minimum parent/child ratio for index lookups.
    pub idx_ratio: f64,
    /// Largest child set worth routing.
    pub tau_route: f64,
    /// Both sides above this use a partitioned hash join.
    pub tau_part: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { tau_idx: 10_000.0, idx_ratio: 100.0, tau_route: 1_000_000.0, tau_part: 100_000.0 }
    }
}

impl PlannerConfig {
    /// Volume thresholds divided by `factor`, for data sets scaled down by
    /// the same factor. `tau_idx` bounds a count of per-document lookups,
    /// which does not shrink with the data, so it stays absolute.
    pub fn scaled(factor: f64) -> Self {
        let d = Self::default();
        Self { tau_idx: d.tau_idx, idx_ratio: d.idx_ratio, tau_route: d.tau_route / factor, tau_part: d.tau_part / factor }
    }
}

/// Picks the join strategy from side cardinalities. `routable` states
/// that the parent key is the parent's single-valued routing field.
pub fn choose_strategy(kind: JoinKind, parent_est: f64, child_est: f64, routable: bool, cfg: &PlannerConfig) -> Strategy {
    if kind == JoinKind::Inner {
        return Strategy::PartitionedHash;
    }
    if child_est <= cfg.tau_idx && child_est <= parent_est / cfg.idx_ratio {
        Strategy::BroadcastIndex
    } else if routable && child_est <= cfg.tau_route {
        Strategy::Routing
    } else if parent_est.min(child_est) > cfg.tau_part {
        Strategy::PartitionedHash
    } else {
        Strategy::BroadcastHash
    }
}

/// Heuristic selectivity of one clause: `1/ndv` for terms, a third for
/// nonempty ranges.
pub fn clause_selectivity(view: &IndexView, clause: &Clause) -> f64 {
    match clause {
        Clause::Term { field, .. } => {
            let ndv = view.distinct_terms(field);
            if ndv == 0 {
                0.0
            } else {
                1.0 / ndv as f64
            }
        }
        Clause::Range { .. } if clause.is_empty_range() => 0.0,
        Clause::Range { .. } => 1.0 / 3.0,
    }
}

/// Doc count times the product of clause selectivities.
pub fn estimate_scan(view: &IndexView, filter: &Filter) -> f64 {
    filter.clauses().iter().fold(view.doc_count() as f64, |acc, c| acc * clause_selectivity(view, c))
}

/// Exact cardinalities of executed subtrees, by canonical text.
#[derive(Debug, Clone, Default)]
pub struct Statistics {
    exact: HashMap<String, u64>,
}

impl Statistics {
    pub fn record(&mut self, canonical: &str, cardinality: u64) {
        self.exact.insert(canonical.to_string(), cardinality);
    }

    pub fn exact(&self, canonical: &str) -> Option<u64> {
        self.exact.get(canonical).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub exact: bool,
}

/// Output cardinality of a scan subtree: exact when it has been executed,
/// otherwise the scan estimate reduced by every join clause with
/// `parent * min(1, child / ndv(parent key))`.
pub fn estimate_cardinality(snapshot: &Snapshot, node: &ScanNode, stats: &Statistics) -> Result<Estimate, PlannerError> {
    if let Some(n) = stats.exact(&node.canonical()) {
        return Ok(Estimate { value: n as f64, exact: true });
    }
    let view = snapshot.index(&node.index)?;
    let mut value = estimate_scan(view, &node.filter);
    for clause in &node.joins {
        let mut factor = 0.0;
        for j in clause.edges() {
            let child = estimate_cardinality(snapshot, &j.child, stats)?.value;
            let ndv = view.distinct_terms(&j.parent_key).max(1) as f64;
            factor += (child / ndv).min(1.0);
        }
        value *= factor.min(1.0);
    }
    Ok(Estimate { value, exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::Store;
    use crate::value::Document;

    #[test]
    fn cdr_query_shapes() {
        let cfg = PlannerConfig::default();
        // both sides large, parent key not the routing field
        for (p, c) in [(78e6, 78e6), (546e6, 546e6), (156e6, 156e6), (1.0e9, 1.2e9), (2.0e9, 2.1e9)] {
            assert_eq!(choose_strategy(JoinKind::Semi, p, c, false, &cfg), Strategy::PartitionedHash);
        }
        assert_eq!(choose_strategy(JoinKind::Semi, 14e6, 2_160.0, false, &cfg), Strategy::BroadcastIndex);
        assert_eq!(choose_strategy(JoinKind::Semi, 14e6, 500_000.0, true, &cfg), Strategy::Routing);
        assert_eq!(choose_strategy(JoinKind::Semi, 5_000.0, 500.0, false, &cfg), Strategy::BroadcastHash);
        assert_eq!(choose_strategy(JoinKind::Inner, 14e6, 2.0, true, &cfg), Strategy::PartitionedHash);
    }

    #[test]
    fn estimates() {
        let store = Store::new();
        store.create_index("e", 1, "id").unwrap();
        store.create_index("z", 1, "id").unwrap();
        store.add_documents("e", (0..1000).map(|i| Document::new().with("id", i as i64).with("g", (i % 10) as i64))).unwrap();
        store.seal_all("e").unwrap();
        let snap = store.snapshot_all();
        let node = ScanNode::new("e").filter(Filter::term("g", 3));
        let mut stats = Statistics::default();
        let est = estimate_cardinality(&snap, &node, &stats).unwrap();
        assert_eq!(est, Estimate { value: 100.0, exact: false });
        stats.record(&node.canonical(), 42);
        assert_eq!(estimate_cardinality(&snap, &node, &stats).unwrap(), Estimate { value: 42.0, exact: true });
        assert_eq!(estimate_cardinality(&snap, &ScanNode::new("z"), &Statistics::default()).unwrap().value, 0.0);
    }
}
