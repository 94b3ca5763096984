// SPDX-License-Identifier: Apache-2.0

//! Staged query planning and execution.
//!
//! A [`LogicalPlan`] is a tree of scans connected by join edges. It is cut
//! into [`Stage`]s, one per edge, so that every stage ends at a fully
//! materialized document set. Stages with identical semantics are folded
//! and executed once. The executor runs ready stages on a bounded worker
//! pool and picks each join strategy either upfront from estimates
//! ([`PlannerMode::Static`]) or right before the stage runs from the exact
//! sizes of its inputs ([`PlannerMode::Adaptive`]).

mod cost;
mod exec;
mod explain;
mod plan;

pub use cost::{choose_strategy, clause_selectivity, estimate_cardinality, estimate_scan, Estimate, PlannerConfig, Statistics};
pub use exec::{
    execute_adaptive, execute_static, BatchOutput, CacheOutcome, ExecConfig, ExecCounters, Executor, PlannerMode, PrefetchTrace,
    QueryOutput, StageTrace, Trace,
};
pub use explain::explain;
pub use plan::{
    build_stages, fold_plan, FlatEdge, FlatScan, FoldGroup, FoldReport, FoldedPlan, JoinClause, JoinNode, LogicalPlan, ScanNode, Stage,
    StageGraph, StageKind,
};

use crate::join::JoinError;
use crate::storage::StorageError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlannerError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Join(#[from] JoinError),
    #[error("malformed plan: {0}")]
    Malformed(String),
}
