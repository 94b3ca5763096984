// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;
use serde_json::{json, Value};

use crate::cache::{CacheMode, SemanticCache};
use crate::docset::GlobalDocId;
use crate::exchange::ClusterTopology;
use crate::pathquery::{Path, SjdCounters, SjdEngine, SjdOutcome};
use crate::planner::{BatchOutput, ExecConfig, Executor, Trace};
use crate::storage::Snapshot;
use crate::value::{FieldValue, Scalar};

use super::lower::{Lowered, PathsQuery, PlanQuery};
use super::QueryError;

/// Projected rows. Plan results keep one row per distinct binding tuple of
/// the inner-joined variables, so projections may repeat.
#[derive(Debug, Clone, Serialize)]
pub struct QueryResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Plan queries: stage graph, trace and root sets.
    #[serde(skip)]
    pub batch: Option<BatchOutput>,
    #[serde(skip)]
    pub paths: Option<SjdOutcome>,
}

impl QueryResult {
    pub fn trace(&self) -> Option<&Trace> {
        self.batch.as_ref().map(|b| &b.trace)
    }

    pub fn sjd_counters(&self) -> Option<SjdCounters> {
        self.paths.as_ref().map(|p| p.counters)
    }
}

pub struct QueryEngine<'a> {
    pub snapshot: &'a Snapshot,
    pub topology: &'a ClusterTopology,
    /// Path queries always memoize; unless the shared cache is on they use
    /// a private one per query.
    pub cache: Option<&'a SemanticCache>,
    pub exec: ExecConfig,
}

fn scalar_json(s: &Scalar) -> Value {
    match s {
        Scalar::Int(v) => json!(v),
        Scalar::Float(v) => json!(v),
        Scalar::Text(t) => json!(t),
    }
}

fn field_json(v: Option<&FieldValue>) -> Value {
    match v {
        None => Value::Null,
        Some(FieldValue::One(s)) => scalar_json(s),
        Some(FieldValue::Many(xs)) => Value::Array(xs.iter().map(scalar_json).collect()),
    }
}

impl<'a> QueryEngine<'a> {
    pub fn new(snapshot: &'a Snapshot, topology: &'a ClusterTopology, cache: Option<&'a SemanticCache>, exec: ExecConfig) -> Self {
        Self { snapshot, topology, cache, exec }
    }

    pub fn execute(&self, lowered: &Lowered) -> Result<QueryResult, QueryError> {
        match lowered {
            Lowered::Plan(p) => self.plan(p),
            Lowered::Paths(p) => self.paths(p),
        }
    }

    fn value(&self, index: &str, doc: GlobalDocId, field: &str) -> Result<Value, QueryError> {
        Ok(field_json(self.snapshot.index(index)?.value_of(doc, field)?))
    }

    fn plan(&self, q: &PlanQuery) -> Result<QueryResult, QueryError> {
        q.plan.validate(self.snapshot)?;
        let batch = Executor::new(self.snapshot, self.topology, self.cache, self.exec.clone()).run(std::slice::from_ref(&q.plan))?;
        let out = &batch.results[0];
        let mut indices = Vec::new();
        collect_indices(&q.plan.root, &mut indices);
        let mut cols = Vec::new();
        for (var, field) in &q.select {
            let c = out
                .columns
                .iter()
                .position(|c| c == var)
                .ok_or_else(|| QueryError::Semantic(format!("`{var}` is not an output column")))?;
            let index = indices.iter().find(|(b, _)| b == var).map(|(_, i)| i.clone()).expect("bound scan");
            cols.push((c, index, field.clone()));
        }
        let mut rows = Vec::with_capacity(out.rows.len());
        for r in &out.rows {
            let mut row = Vec::with_capacity(cols.len());
            for (c, index, field) in &cols {
                row.push(match field {
                    Some(f) => self.value(index, r[*c], f)?,
                    None => json!(r[*c].to_string()),
                });
            }
            rows.push(row);
        }
        let columns = q.select.iter().map(|(v, f)| f.as_ref().map_or(v.clone(), |f| format!("{v}.{f}"))).collect();
        Ok(QueryResult { columns, rows, batch: Some(batch), paths: None })
    }

    fn paths(&self, q: &PathsQuery) -> Result<QueryResult, QueryError> {
        let private;
        let cache = match self.cache {
            Some(c) if self.exec.cache_mode == CacheMode::On => c,
            _ => {
                private = SemanticCache::new(64 << 20);
                &private
            }
        };
        let mut engine = SjdEngine::new(self.snapshot, self.topology, cache);
        engine.config.exec = self.exec.clone();
        let outcome = engine.run(&q.spec)?;
        let mut rows = Vec::with_capacity(outcome.paths.len());
        for p in &outcome.paths {
            rows.push(vec![self.path_json(&outcome, p)?]);
        }
        Ok(QueryResult { columns: vec![q.path_var.clone()], rows, batch: None, paths: Some(outcome) })
    }

    fn path_json(&self, outcome: &SjdOutcome, p: &Path) -> Result<Value, QueryError> {
        let schema = outcome.schema_for(p).expect("schema for every emitted length");
        let mut steps = Vec::with_capacity(p.docs.len());
        for (pos, d) in schema.positions.iter().zip(&p.docs) {
            steps.push(json!({ "index": pos.index, "doc": d.to_string(), "id": self.value(&pos.index, *d, "id")? }));
        }
        Ok(Value::Array(steps))
    }
}

fn collect_indices(n: &crate::planner::ScanNode, out: &mut Vec<(String, String)>) {
    if let Some(b) = &n.binding {
        out.push((b.clone(), n.index.clone()));
    }
    for c in &n.joins {
        for e in c.edges() {
            collect_indices(&e.child, out);
        }
    }
}
