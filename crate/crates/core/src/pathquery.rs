// SPDX-License-Identifier: Apache-2.0

//! Path enumeration by semi-join decomposition.
//!
//! A length-`l` path query over positions `D_1 .. D_{l+1}` is answered by
//! `l + 1` semi-join plans. Plan `q_k` keeps the documents of `D_k` that
//! are reachable from the source through `D_1 .. D_{k-1}` and reach the
//! target through `D_{k+1} .. D_{l+1}`, i.e. the layer of position `k`.
//! Every arm of every plan is a prefix or suffix chain, so with a shared
//! [`SemanticCache`] one fixed length costs at most `2l` semi-joins and
//! lengthening the path by one step adds a handful more. Paths are then
//! enumerated by a depth-first walk that only visits layer members, so
//! no partial path is ever a dead end.
//!
//! The inner-join chain baseline enumerates the same paths by extending
//! partial paths hop by hop under a cell budget.

use std::collections::HashMap;

use serde::Serialize;

use crate::cache::SemanticCache;
use crate::docset::{DocSet, GlobalDocId};
use crate::exchange::ClusterTopology;
use crate::filter::Filter;
use crate::join::{self, JoinInput, JoinKind, JoinOptions, JoinResult, Strategy};
use crate::planner::{ExecConfig, Executor, LogicalPlan, PlannerError, ScanNode};
use crate::storage::{Snapshot, StorageError};
use crate::value::Key;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PathError {
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Join(#[from] join::JoinError),
    #[error("invalid path schema: {0}")]
    Schema(String),
    #[error("repetition count {reps} outside {min}..={max}")]
    LengthOutOfRange { reps: usize, min: usize, max: usize },
    #[error("inner-join chain needs {cells} cells, budget is {budget}")]
    BudgetExhausted { cells: u64, budget: u64 },
}

pub type Result<T, E = PathError> = std::result::Result<T, E>;

/// One path position: an index and the filter its documents must pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathPos {
    pub index: String,
    pub filter: Filter,
}

impl PathPos {
    pub fn new(index: &str, filter: Filter) -> Self {
        Self { index: index.to_string(), filter }
    }
}

/// Move from the current position to the next one: `out_key` on the
/// current document equals `in_key` on the next.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub out_key: String,
    pub index: String,
    pub in_key: String,
    pub filter: Filter,
}

impl Step {
    pub fn new(out_key: &str, index: &str, in_key: &str, filter: Filter) -> Self {
        Self { out_key: out_key.to_string(), index: index.to_string(), in_key: in_key.to_string(), filter }
    }
}

/// Steps repeated `min..=max` times. The group starts and ends on the same
/// index; `entry_filter` applies at every repetition boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopGroup {
    pub entry_filter: Filter,
    pub steps: Vec<Step>,
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSemantics {
    AllShortest,
    AllUpTo,
}

/// Path template: `start`, `prefix`, the repeated group, then `suffix`.
/// `exit_filter` applies where the group ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathQuerySpec {
    pub start: PathPos,
    pub prefix: Vec<Step>,
    pub group: Option<HopGroup>,
    pub exit_filter: Filter,
    pub suffix: Vec<Step>,
    pub semantics: PathSemantics,
}

impl PathQuerySpec {
    /// Paths of 1 to `max_len` hops over one self-referencing index.
    pub fn homogeneous(index: &str, out_key: &str, in_key: &str, source: Filter, target: Filter, max_len: usize, semantics: PathSemantics) -> Self {
        Self {
            start: PathPos::new(index, source),
            prefix: Vec::new(),
            group: Some(HopGroup {
                entry_filter: Filter::all(),
                steps: vec![Step::new(out_key, index, in_key, Filter::all())],
                min: 1,
                max: max_len,
            }),
            exit_filter: target,
            suffix: Vec::new(),
            semantics,
        }
    }

    /// Repetition counts to try, ascending.
    pub fn repetitions(&self) -> std::ops::RangeInclusive<usize> {
        match &self.group {
            Some(g) => g.min..=g.max,
            None => 0..=0,
        }
    }

    /// The schema with the group repeated `reps` times.
    pub fn instantiate(&self, reps: usize) -> Result<PathSchema> {
        let mut positions = vec![self.start.clone()];
        let mut hops = Vec::new();
        let push = |positions: &mut Vec<PathPos>, hops: &mut Vec<Hop>, s: &Step| {
            hops.push(Hop { out_key: s.out_key.clone(), in_key: s.in_key.clone() });
            positions.push(PathPos::new(&s.index, s.filter.clone()));
        };
        for s in &self.prefix {
            push(&mut positions, &mut hops, s);
        }
        match &self.group {
            Some(g) => {
                if reps < g.min || reps > g.max || g.min == 0 && g.max == 0 {
                    return Err(PathError::LengthOutOfRange { reps, min: g.min, max: g.max });
                }
                let entry = &positions.last().unwrap().index;
                if g.steps.is_empty() || &g.steps.last().unwrap().index != entry {
                    return Err(PathError::Schema(format!("group must return to index `{entry}`")));
                }
                for _ in 0..reps {
                    let last = positions.last_mut().unwrap();
                    last.filter = last.filter.clone().and_filter(&g.entry_filter);
                    for s in &g.steps {
                        push(&mut positions, &mut hops, s);
                    }
                }
            }
            None if reps != 0 => return Err(PathError::LengthOutOfRange { reps, min: 0, max: 0 }),
            None => {}
        }
        let last = positions.last_mut().unwrap();
        last.filter = last.filter.clone().and_filter(&self.exit_filter);
        for s in &self.suffix {
            push(&mut positions, &mut hops, s);
        }
        if hops.is_empty() {
            return Err(PathError::Schema("a path needs at least one hop".into()));
        }
        Ok(PathSchema { positions, hops })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hop {
    /// Field on position `i`.
    pub out_key: String,
    /// Field on position `i + 1`.
    pub in_key: String,
}

/// A fixed-length instance: `positions.len() == hops.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSchema {
    pub positions: Vec<PathPos>,
    pub hops: Vec<Hop>,
}

impl PathSchema {
    /// Number of hops `l`.
    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    /// Indices exist and joined fields do not mix text with numbers.
    pub fn validate(&self, snapshot: &Snapshot) -> Result<()> {
        for (i, h) in self.hops.iter().enumerate() {
            let a = snapshot.index(&self.positions[i].index)?.field_stats(&h.out_key);
            let b = snapshot.index(&self.positions[i + 1].index)?.field_stats(&h.in_key);
            let pure = |s: &crate::storage::FieldStats| match (s.has_text, s.has_numeric) {
                (true, false) => Some(true),
                (false, true) => Some(false),
                _ => None,
            };
            if let (Some(x), Some(y)) = (pure(&a), pure(&b)) {
                if x != y {
                    return Err(PathError::Schema(format!(
                        "hop {i}: {}.{} and {}.{} have different key types",
                        self.positions[i].index,
                        h.out_key,
                        self.positions[i + 1].index,
                        h.in_key
                    )));
                }
            }
        }
        Ok(())
    }

    fn scan(&self, i: usize) -> ScanNode {
        let p = &self.positions[i];
        ScanNode::new(&p.index).filter(p.filter.clone())
    }

    /// Position `i` reduced by the chain from the source.
    fn left(&self, i: usize) -> ScanNode {
        if i == 0 {
            return self.scan(0);
        }
        let h = &self.hops[i - 1];
        self.scan(i).semi(&h.in_key, &h.out_key, self.left(i - 1))
    }

    /// Position `i` reduced by the chain to the target.
    fn right(&self, i: usize) -> ScanNode {
        if i == self.len() {
            return self.scan(i);
        }
        let h = &self.hops[i];
        self.scan(i).semi(&h.out_key, &h.in_key, self.right(i + 1))
    }

    /// Plan whose result is the layer of position `i` (0-based).
    pub fn layer_plan(&self, i: usize) -> LogicalPlan {
        let l = self.len();
        let root = if i == 0 {
            self.right(0)
        } else if i == l {
            self.left(l)
        } else {
            let (lh, rh) = (&self.hops[i - 1], &self.hops[i]);
            self.scan(i).semi(&lh.in_key, &lh.out_key, self.left(i - 1)).semi(&rh.out_key, &rh.in_key, self.right(i + 1))
        };
        LogicalPlan::new(root)
    }

    /// `q_1 .. q_{l+1}`.
    pub fn decompose(&self) -> Vec<LogicalPlan> {
        (0..=self.len()).map(|i| self.layer_plan(i)).collect()
    }
}

/// Layer sets of one length; `sets[k]` belongs to position `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSets {
    pub sets: Vec<DocSet>,
}

impl LayerSets {
    pub fn is_empty(&self) -> bool {
        self.sets.iter().any(DocSet::is_empty)
    }

    pub fn total(&self) -> u64 {
        self.sets.iter().map(DocSet::len).sum()
    }
}

/// One path: document ids by position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Path {
    pub docs: Vec<GlobalDocId>,
}

impl Path {
    /// Number of hops.
    pub fn len(&self) -> usize {
        self.docs.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.docs.len() < 2
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SjdCounters {
    pub semi_joins_executed: u64,
    pub cache_hits: u64,
    pub lengths_tested: u64,
    pub paths_emitted: u64,
    /// Largest live working set of any semi-join during layer computation.
    pub peak_live_tuples: u64,
    pub layer_lookups: u64,
}

impl SjdCounters {
    fn absorb(&mut self, t: &crate::planner::Trace) {
        self.semi_joins_executed += t.counters.semi_joins_computed;
        self.cache_hits += t.counters.cache_hits;
        self.peak_live_tuples = self.peak_live_tuples.max(t.peak_live_tuples());
    }
}

/// Which decomposition query serves as the reachability test.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum Pivot {
    /// `q_{l+1}`: its arm is the longest prefix chain, which the next
    /// length extends.
    #[default]
    Last,
    Middle,
}

#[derive(Debug, Clone, Default)]
pub struct SjdConfig {
    pub pivot: Pivot,
    pub exec: ExecConfig,
}

/// Per-length record of an incremental search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LengthRecord {
    pub reps: usize,
    pub hops: usize,
    pub reachable: bool,
    pub semi_joins: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SjdOutcome {
    /// Hop count of the shortest paths found.
    pub length: Option<usize>,
    pub paths: Vec<Path>,
    /// Schema of each path, by hop count.
    pub schemas: Vec<PathSchema>,
    pub counters: SjdCounters,
    pub per_length: Vec<LengthRecord>,
}

impl SjdOutcome {
    pub fn schema_for(&self, path: &Path) -> Option<&PathSchema> {
        self.schemas.iter().find(|s| s.len() == path.len())
    }
}

pub struct SjdEngine<'a> {
    pub snapshot: &'a Snapshot,
    pub topology: &'a ClusterTopology,
    pub cache: &'a SemanticCache,
    pub config: SjdConfig,
}

impl<'a> SjdEngine<'a> {
    pub fn new(snapshot: &'a Snapshot, topology: &'a ClusterTopology, cache: &'a SemanticCache) -> Self {
        Self { snapshot, topology, cache, config: SjdConfig::default() }
    }

    fn executor(&self) -> Executor<'_> {
        let mut cfg = self.config.exec.clone();
        cfg.cache_mode = crate::cache::CacheMode::On;
        Executor::new(self.snapshot, self.topology, Some(self.cache), cfg)
    }

    fn pivot(&self, schema: &PathSchema) -> usize {
        match self.config.pivot {
            Pivot::Last => schema.len(),
            Pivot::Middle => schema.len() / 2,
        }
    }

    /// Whether any path of exactly this schema exists. Runs only the pivot
    /// plan.
    pub fn reachability_test(&self, schema: &PathSchema, counters: &mut SjdCounters) -> Result<bool> {
        schema.validate(self.snapshot)?;
        let out = self.executor().run(&[schema.layer_plan(self.pivot(schema))])?;
        counters.absorb(&out.trace);
        Ok(!out.results[0].docs.is_empty())
    }

    /// All layers. The pivot runs first; if it is empty the rest are
    /// skipped and every layer is empty.
    pub fn compute_layer_sets(&self, schema: &PathSchema, counters: &mut SjdCounters) -> Result<LayerSets> {
        schema.validate(self.snapshot)?;
        let l = schema.len();
        let pivot = self.pivot(schema);
        let first = self.executor().run(&[schema.layer_plan(pivot)])?;
        counters.absorb(&first.trace);
        let pivot_set = first.results[0].docs.clone();
        if pivot_set.is_empty() {
            return Ok(LayerSets { sets: vec![DocSet::new(); l + 1] });
        }
        let rest: Vec<usize> = (0..=l).rev().filter(|&i| i != pivot).collect();
        let plans: Vec<LogicalPlan> = rest.iter().map(|&i| schema.layer_plan(i)).collect();
        let out = self.executor().run(&plans)?;
        counters.absorb(&out.trace);
        let mut sets = vec![DocSet::new(); l + 1];
        sets[pivot] = pivot_set;
        for (r, &i) in out.results.into_iter().zip(&rest) {
            sets[i] = r.docs;
        }
        Ok(LayerSets { sets })
    }

    /// Lazy depth-first enumeration over the layers.
    pub fn materialize_paths(&self, schema: &PathSchema, layers: &LayerSets) -> Result<PathIter<'a>> {
        PathIter::new(self.snapshot, schema.clone(), layers.clone())
    }

    /// Tries repetition counts in ascending order and returns every path of
    /// the first length that has any.
    pub fn all_shortest_paths(&self, spec: &PathQuerySpec) -> Result<SjdOutcome> {
        let mut counters = SjdCounters::default();
        let mut per_length = Vec::new();
        for reps in spec.repetitions() {
            let schema = spec.instantiate(reps)?;
            counters.lengths_tested += 1;
            let before = counters.semi_joins_executed;
            let reachable = self.reachability_test(&schema, &mut counters)?;
            let mut record = LengthRecord { reps, hops: schema.len(), reachable, semi_joins: 0 };
            if !reachable {
                record.semi_joins = counters.semi_joins_executed - before;
                per_length.push(record);
                continue;
            }
            let layers = self.compute_layer_sets(&schema, &mut counters)?;
            record.semi_joins = counters.semi_joins_executed - before;
            per_length.push(record);
            let mut it = self.materialize_paths(&schema, &layers)?;
            let paths: Vec<Path> = it.by_ref().collect();
            counters.layer_lookups += it.lookups();
            counters.paths_emitted += paths.len() as u64;
            return Ok(SjdOutcome { length: Some(schema.len()), paths, schemas: vec![schema], counters, per_length });
        }
        Ok(SjdOutcome { length: None, paths: Vec::new(), schemas: Vec::new(), counters, per_length })
    }

    /// Every path for every repetition count, shortest first.
    pub fn paths_up_to(&self, spec: &PathQuerySpec) -> Result<SjdOutcome> {
        let mut counters = SjdCounters::default();
        let mut per_length = Vec::new();
        let mut paths = Vec::new();
        let mut schemas = Vec::new();
        let mut length = None;
        for reps in spec.repetitions() {
            let schema = spec.instantiate(reps)?;
            counters.lengths_tested += 1;
            let before = counters.semi_joins_executed;
            let layers = self.compute_layer_sets(&schema, &mut counters)?;
            let reachable = !layers.is_empty();
            per_length.push(LengthRecord { reps, hops: schema.len(), reachable, semi_joins: counters.semi_joins_executed - before });
            if reachable {
                length.get_or_insert(schema.len());
                let mut it = self.materialize_paths(&schema, &layers)?;
                let found: Vec<Path> = it.by_ref().collect();
                counters.layer_lookups += it.lookups();
                counters.paths_emitted += found.len() as u64;
                paths.extend(found);
            }
            schemas.push(schema);
        }
        Ok(SjdOutcome { length, paths, schemas, counters, per_length })
    }

    /// Answers `spec` under its own semantics.
    pub fn run(&self, spec: &PathQuerySpec) -> Result<SjdOutcome> {
        match spec.semantics {
            PathSemantics::AllShortest => self.all_shortest_paths(spec),
            PathSemantics::AllUpTo => self.paths_up_to(spec),
        }
    }
}

/// Streaming guided DFS. Branches are visited in ascending document id.
pub struct PathIter<'a> {
    snapshot: &'a Snapshot,
    schema: PathSchema,
    /// `tables[i]`: `in_key` value of position `i` to its layer members.
    tables: Vec<HashMap<Key, Vec<GlobalDocId>>>,
    /// Pending candidates per depth, reversed so `pop` yields the smallest.
    stack: Vec<Vec<GlobalDocId>>,
    prefix: Vec<GlobalDocId>,
    lookups: u64,
    failed: Option<PathError>,
}

impl<'a> PathIter<'a> {
    fn new(snapshot: &'a Snapshot, schema: PathSchema, layers: LayerSets) -> Result<Self> {
        let l = schema.len();
        let mut tables = vec![HashMap::new()];
        for i in 1..=l {
            let mut t: HashMap<Key, Vec<GlobalDocId>> = HashMap::new();
            if !layers.sets[i].is_empty() {
                for (doc, v) in snapshot.scan_field_column(&schema.positions[i].index, &schema.hops[i - 1].in_key, Some(&layers.sets[i]))? {
                    t.entry(v.key()).or_default().push(doc);
                }
            }
            for docs in t.values_mut() {
                docs.sort_unstable();
                docs.dedup();
            }
            tables.push(t);
        }
        let mut first: Vec<GlobalDocId> = if layers.is_empty() { Vec::new() } else { layers.sets[0].to_vec() };
        first.reverse();
        Ok(Self { snapshot, schema, tables, stack: vec![first], prefix: Vec::new(), lookups: 0, failed: None })
    }

    /// Layer-table probes so far.
    pub fn lookups(&self) -> u64 {
        self.lookups
    }

    /// Set if a document read failed; iteration stops at that point.
    pub fn error(&self) -> Option<&PathError> {
        self.failed.as_ref()
    }

    fn successors(&mut self, depth: usize, doc: GlobalDocId) -> Result<Vec<GlobalDocId>> {
        let view = self.snapshot.index(&self.schema.positions[depth].index)?;
        let mut out = Vec::new();
        if let Some(values) = view.value_of(doc, &self.schema.hops[depth].out_key)? {
            for v in values.values() {
                self.lookups += 1;
                if let Some(docs) = self.tables[depth + 1].get(&v.key()) {
                    out.extend_from_slice(docs);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out.reverse();
        Ok(out)
    }
}

impl Iterator for PathIter<'_> {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        let l = self.schema.len();
        while let Some(top) = self.stack.last_mut() {
            let Some(doc) = top.pop() else {
                self.stack.pop();
                self.prefix.pop();
                continue;
            };
            let depth = self.prefix.len();
            if depth == l {
                let mut docs = self.prefix.clone();
                docs.push(doc);
                return Some(Path { docs });
            }
            match self.successors(depth, doc) {
                Ok(next) => {
                    self.prefix.push(doc);
                    self.stack.push(next);
                }
                Err(e) => {
                    self.failed = Some(e);
                    self.stack.clear();
                }
            }
        }
        None
    }
}

/// Enumerates paths by chaining inner joins over the unreduced positions.
/// The working set is counted in cells (partial paths times their width)
/// and must stay within `budget_cells`.
pub fn inner_join_chain_baseline(
    snapshot: &Snapshot,
    topology: &ClusterTopology,
    schema: &PathSchema,
    budget_cells: u64,
) -> Result<Vec<Path>> {
    schema.validate(snapshot)?;
    let sets: Vec<DocSet> =
        schema.positions.iter().map(|p| snapshot.eval_filter(&p.index, &p.filter)).collect::<Result<_, _>>()?;
    let mut rows: Vec<Vec<GlobalDocId>> = sets[0].iter().map(|d| vec![d]).collect();
    let opts = JoinOptions::default();
    for (i, hop) in schema.hops.iter().enumerate() {
        if rows.is_empty() {
            break;
        }
        let frontier: DocSet = rows.iter().map(|r| *r.last().unwrap()).collect();
        let input = JoinInput {
            snapshot,
            parent_index: &schema.positions[i].index,
            parent_key: &hop.out_key,
            parent_set: &frontier,
            child_index: &schema.positions[i + 1].index,
            child_key: &hop.in_key,
            child_set: &sets[i + 1],
            kind: JoinKind::Inner,
            projection: &[],
        };
        let (res, _) = join::execute(&input, Strategy::PartitionedHash, topology, &opts)?;
        let mut next: HashMap<GlobalDocId, Vec<GlobalDocId>> = HashMap::new();
        if let JoinResult::Inner(pairs) = res {
            for r in pairs {
                next.entry(r.parent).or_default().push(r.child);
            }
        }
        for v in next.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        let width = (i + 2) as u64;
        let count: u64 = rows.iter().map(|r| next.get(r.last().unwrap()).map_or(0, Vec::len) as u64).sum();
        if count * width > budget_cells {
            return Err(PathError::BudgetExhausted { cells: count * width, budget: budget_cells });
        }
        rows = rows
            .into_iter()
            .flat_map(|r| {
                let kids = next.get(r.last().unwrap()).cloned().unwrap_or_default();
                kids.into_iter().map(move |k| {
                    let mut r = r.clone();
                    r.push(k);
                    r
                })
            })
            .collect();
    }
    let mut paths: Vec<Path> = rows.into_iter().filter(|r| r.len() == schema.len() + 1).map(|docs| Path { docs }).collect();
    paths.sort();
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::Store;
    use crate::value::{Document, FieldValue, Scalar};

    /// Graph over index `v` with multi-valued adjacency field `out`.
    fn graph(edges: &[(i64, i64)], nodes: i64) -> Store {
        let store = Store::new();
        store.create_index("v", 1, "id").unwrap();
        let docs = (0..nodes).map(|n| {
            let outs: Vec<Scalar> = edges.iter().filter(|e| e.0 == n).map(|e| Scalar::Int(e.1)).collect();
            let mut d = Document::new().with("id", n);
            if !outs.is_empty() {
                d = d.with("out", FieldValue::Many(outs));
            }
            d
        });
        store.add_documents("v", docs).unwrap();
        store.seal_all("v").unwrap();
        store
    }

    fn spec(src: i64, dst: i64, max: usize, sem: PathSemantics) -> PathQuerySpec {
        PathQuerySpec::homogeneous("v", "out", "id", Filter::term("id", src), Filter::term("id", dst), max, sem)
    }

    fn ids(snap: &Snapshot, p: &Path) -> Vec<i64> {
        p.docs.iter().map(|&d| snap.index("v").unwrap().value_of(d, "id").unwrap().unwrap().first().unwrap().as_i64().unwrap()).collect()
    }

    fn layer_ids(snap: &Snapshot, s: &DocSet) -> Vec<i64> {
        let mut v: Vec<i64> = s.iter().map(|d| snap.index("v").unwrap().value_of(d, "id").unwrap().unwrap().first().unwrap().as_i64().unwrap()).collect();
        v.sort();
        v
    }

    #[test]
    fn decomposition_shape() {
        let s = spec(0, 3, 3, PathSemantics::AllShortest).instantiate(3).unwrap();
        let qs = s.decompose();
        assert_eq!(qs.len(), 4);
        for q in &qs {
            let g = crate::planner::build_stages(std::slice::from_ref(q));
            let edges = g.edges.len();
            assert_eq!(edges, 3, "every q_k has l semi-joins");
        }
        let s1 = spec(0, 1, 1, PathSemantics::AllShortest).instantiate(1).unwrap();
        assert_eq!(s1.decompose().len(), 2);
        assert!(matches!(spec(0, 1, 3, PathSemantics::AllShortest).instantiate(4), Err(PathError::LengthOutOfRange { .. })));
    }

    #[test]
    fn diamond_layers_and_paths() {
        // u=0, a=1, b=2, v=3
        let store = graph(&[(0, 1), (0, 2), (1, 3), (2, 3)], 4);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(2);
        let cache = SemanticCache::default();
        let eng = SjdEngine::new(&snap, &topo, &cache);
        let schema = spec(0, 3, 2, PathSemantics::AllShortest).instantiate(2).unwrap();
        let mut c = SjdCounters::default();
        let layers = eng.compute_layer_sets(&schema, &mut c).unwrap();
        let got: Vec<Vec<i64>> = layers.sets.iter().map(|s| layer_ids(&snap, s)).collect();
        assert_eq!(got, vec![vec![0], vec![1, 2], vec![3]]);
        let paths: Vec<Vec<i64>> = eng.materialize_paths(&schema, &layers).unwrap().map(|p| ids(&snap, &p)).collect();
        assert_eq!(paths, vec![vec![0, 1, 3], vec![0, 2, 3]]);
        let base: Vec<Vec<i64>> = inner_join_chain_baseline(&snap, &topo, &schema, 1000).unwrap().iter().map(|p| ids(&snap, p)).collect();
        assert_eq!(base, paths);
    }

    #[test]
    fn dead_end_pruned() {
        let store = graph(&[(0, 1), (1, 2), (0, 3)], 4);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(1);
        let cache = SemanticCache::default();
        let eng = SjdEngine::new(&snap, &topo, &cache);
        let schema = spec(0, 2, 2, PathSemantics::AllShortest).instantiate(2).unwrap();
        let layers = eng.compute_layer_sets(&schema, &mut SjdCounters::default()).unwrap();
        assert_eq!(layer_ids(&snap, &layers.sets[1]), vec![1]);
    }

    #[test]
    fn reachability() {
        let store = graph(&[(0, 1)], 2);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(1);
        let cache = SemanticCache::default();
        let eng = SjdEngine::new(&snap, &topo, &cache);
        let sp = spec(0, 1, 2, PathSemantics::AllShortest);
        let mut c = SjdCounters::default();
        assert!(eng.reachability_test(&sp.instantiate(1).unwrap(), &mut c).unwrap());
        assert!(!eng.reachability_test(&sp.instantiate(2).unwrap(), &mut c).unwrap());
    }

    #[test]
    fn unreachable_tests_every_length() {
        let store = graph(&[(0, 1), (2, 3)], 4);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(1);
        let cache = SemanticCache::default();
        let out = SjdEngine::new(&snap, &topo, &cache).all_shortest_paths(&spec(0, 3, 6, PathSemantics::AllShortest)).unwrap();
        assert!(out.paths.is_empty());
        assert_eq!(out.length, None);
        assert_eq!(out.counters.lengths_tested, 6);
    }

    #[test]
    fn self_target_has_no_zero_length_path() {
        let store = graph(&[(0, 1)], 2);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(1);
        let cache = SemanticCache::default();
        let out = SjdEngine::new(&snap, &topo, &cache).all_shortest_paths(&spec(0, 0, 3, PathSemantics::AllShortest)).unwrap();
        assert!(out.paths.is_empty());
    }

    #[test]
    fn up_to_collects_every_length() {
        // u=0 -> a=1 -> v=2 and u -> v
        let store = graph(&[(0, 1), (1, 2), (0, 2)], 3);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(1);
        let cache = SemanticCache::default();
        let out = SjdEngine::new(&snap, &topo, &cache).paths_up_to(&spec(0, 2, 2, PathSemantics::AllUpTo)).unwrap();
        let got: Vec<Vec<i64>> = out.paths.iter().map(|p| ids(&snap, p)).collect();
        assert_eq!(got, vec![vec![0, 2], vec![0, 1, 2]]);
        assert_eq!(out.length, Some(1));
    }

    #[test]
    fn bipartite_three_by_three() {
        // 0 -> {1,2,3} -> {4,5,6} (complete) -> 7
        let mut e = vec![];
        for a in 1..=3 {
            e.push((0, a));
            for b in 4..=6 {
                e.push((a, b));
            }
        }
        for b in 4..=6 {
            e.push((b, 7));
        }
        let store = graph(&e, 8);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(3);
        let cache = SemanticCache::default();
        let out = SjdEngine::new(&snap, &topo, &cache).all_shortest_paths(&spec(0, 7, 4, PathSemantics::AllShortest)).unwrap();
        assert_eq!(out.length, Some(3));
        assert_eq!(out.paths.len(), 9);
    }

    #[test]
    fn first_path_is_cheap() {
        let mut e = vec![];
        for a in 1..=5 {
            e.push((0, a));
            for b in 6..=10 {
                e.push((a, b));
            }
        }
        for b in 6..=10 {
            e.push((b, 11));
        }
        let store = graph(&e, 12);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(1);
        let cache = SemanticCache::default();
        let eng = SjdEngine::new(&snap, &topo, &cache);
        let schema = spec(0, 11, 3, PathSemantics::AllShortest).instantiate(3).unwrap();
        let layers = eng.compute_layer_sets(&schema, &mut SjdCounters::default()).unwrap();
        let mut it = eng.materialize_paths(&schema, &layers).unwrap();
        let p = it.next().unwrap();
        assert_eq!(ids(&snap, &p), vec![0, 1, 6, 11]);
        // one probe per out value on the way down
        assert!(it.lookups() <= 5 + 5 + 1);
    }

    #[test]
    fn warm_fixed_length_counts() {
        let store = graph(&[(0, 1), (1, 2), (2, 3), (3, 4)], 5);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(1);
        let cache = SemanticCache::default();
        let eng = SjdEngine::new(&snap, &topo, &cache);
        let schema = spec(0, 4, 4, PathSemantics::AllShortest).instantiate(4).unwrap();
        let mut c = SjdCounters::default();
        eng.compute_layer_sets(&schema, &mut c).unwrap();
        assert_eq!(c.semi_joins_executed, 8);
        let mut again = SjdCounters::default();
        eng.compute_layer_sets(&schema, &mut again).unwrap();
        assert_eq!(again.semi_joins_executed, 0);
    }

    #[test]
    fn baseline_budget() {
        let store = graph(&[(0, 1), (0, 2), (1, 3), (2, 3)], 4);
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(1);
        let schema = spec(0, 3, 2, PathSemantics::AllShortest).instantiate(2).unwrap();
        assert!(matches!(inner_join_chain_baseline(&snap, &topo, &schema, 5), Err(PathError::BudgetExhausted { cells: 6, budget: 5 })));
    }
}
