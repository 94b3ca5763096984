// SPDX-License-Identifier: Apache-2.0

//! Equality semi-joins and inner-joins between two indices.
//!
//! A join relates parent document `v` and child document `w` when the value
//! sets `v[s]` and `w[t]` intersect. The semi-join returns the parent ids
//! with at least one partner; the inner join returns one row per matching
//! `(parent, child)` document pair with the requested child fields. Four
//! distribution strategies produce identical results and differ only in the
//! data they move between nodes. The child side always builds the hash
//! table.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::docset::{DocSet, GlobalDocId};
use crate::exchange::{
    build_batches, radix_partition, Batch, ClusterTopology, ExchangeError, NodeId, PartitionKey, Tuple,
    DEFAULT_BATCH_CAPACITY,
};
use crate::filter::Filter;
use crate::par::{self, Parallelism};
use crate::storage::{IndexView, Snapshot, StorageError};
use crate::value::{FieldValue, Key};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
pub enum JoinKind {
    Semi,
    Inner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Strategy {
    BroadcastHash,
    BroadcastIndex,
    PartitionedHash,
    Routing,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::BroadcastHash,
        Strategy::BroadcastIndex,
        Strategy::PartitionedHash,
        Strategy::Routing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::BroadcastHash => "BroadcastHash",
            Strategy::BroadcastIndex => "BroadcastIndex",
            Strategy::PartitionedHash => "PartitionedHash",
            Strategy::Routing => "Routing",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JoinError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
    #[error("join key type mismatch: `{parent}` holds {parent_kind} values, `{child}` holds {child_kind} values")]
    KeyTypeMismatch {
        parent: String,
        parent_kind: &'static str,
        child: String,
        child_kind: &'static str,
    },
    #[error("routing join needs the parent key to be the routing field `{routing}` of `{index}`, got `{key}`")]
    NotRoutable { index: String, routing: String, key: String },
    #[error("routing join needs single-valued routing field `{field}` in `{index}`")]
    MultiValuedRoutingField { index: String, field: String },
    #[error("semi-joins return parent ids only; drop the child projection")]
    ProjectionOnSemi,
}

pub type Result<T, E = JoinError> = std::result::Result<T, E>;

/// One side of a join given as index + filter + key field.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinSide {
    pub index: String,
    pub filter: Filter,
    pub key: String,
}

impl JoinSide {
    pub fn new(index: &str, filter: Filter, key: &str) -> Self {
        Self { index: index.to_string(), filter, key: key.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinSpec {
    pub parent: JoinSide,
    pub child: JoinSide,
    pub kind: JoinKind,
    /// Child fields carried into inner-join rows.
    pub projection: Vec<String>,
}

impl JoinSpec {
    pub fn semi(parent: JoinSide, child: JoinSide) -> Self {
        Self { parent, child, kind: JoinKind::Semi, projection: Vec::new() }
    }

    pub fn inner(parent: JoinSide, child: JoinSide, projection: Vec<String>) -> Self {
        Self { parent, child, kind: JoinKind::Inner, projection }
    }
}

/// A join whose sides are already resolved to document sets. This is what
/// the planner hands over once child subtrees have been executed.
#[derive(Debug, Clone, Copy)]
pub struct JoinInput<'a> {
    pub snapshot: &'a Snapshot,
    pub parent_index: &'a str,
    pub parent_key: &'a str,
    pub parent_set: &'a DocSet,
    pub child_index: &'a str,
    pub child_key: &'a str,
    pub child_set: &'a DocSet,
    pub kind: JoinKind,
    pub projection: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerRow {
    pub parent: GlobalDocId,
    pub child: GlobalDocId,
    pub values: Vec<Option<FieldValue>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JoinResult {
    Semi(DocSet),
    /// Sorted by `(parent, child)`, one row per document pair.
    Inner(Vec<InnerRow>),
}

impl JoinResult {
    pub fn len(&self) -> usize {
        match self {
            JoinResult::Semi(s) => s.len() as usize,
            JoinResult::Inner(rows) => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parent ids present in the result.
    pub fn parents(&self) -> DocSet {
        match self {
            JoinResult::Semi(s) => s.clone(),
            JoinResult::Inner(rows) => rows.iter().map(|r| r.parent).collect(),
        }
    }

    pub fn as_semi(&self) -> Option<&DocSet> {
        match self {
            JoinResult::Semi(s) => Some(s),
            JoinResult::Inner(_) => None,
        }
    }

    pub fn as_inner(&self) -> Option<&[InnerRow]> {
        match self {
            JoinResult::Inner(rows) => Some(rows),
            JoinResult::Semi(_) => None,
        }
    }
}

/// Raw per-node output before grouping.
#[derive(Debug, Clone, PartialEq)]
pub enum Fragment {
    Semi(Vec<GlobalDocId>),
    Inner(Vec<InnerRow>),
}

/// Merges per-node fragments: semi ids collapse into a set, inner rows are
/// sorted by `(parent, child)` and deduplicated per document pair.
pub fn group_sort_output(kind: JoinKind, fragments: Vec<Fragment>) -> JoinResult {
    match kind {
        JoinKind::Semi => {
            let mut set = DocSet::new();
            for f in fragments {
                match f {
                    Fragment::Semi(ids) => set.extend(ids),
                    Fragment::Inner(rows) => set.extend(rows.into_iter().map(|r| r.parent)),
                }
            }
            JoinResult::Semi(set)
        }
        JoinKind::Inner => {
            let mut rows: Vec<InnerRow> = fragments
                .into_iter()
                .flat_map(|f| match f {
                    Fragment::Inner(rows) => rows,
                    Fragment::Semi(_) => Vec::new(),
                })
                .collect();
            rows.sort_by_key(|r| (r.parent, r.child));
            rows.dedup_by_key(|r| (r.parent, r.child));
            JoinResult::Inner(rows)
        }
    }
}

/// Execution statistics of one join invocation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JoinStats {
    pub strategy: Option<Strategy>,
    /// Child `(doc, value)` tuples produced by the child scan.
    pub child_tuples: u64,
    /// Parent tuples probed against a hash table.
    pub probe_tuples: u64,
    /// Distinct join keys on the build side.
    pub build_keys: u64,
    /// Build-side tuples received per node, indexed by node id.
    pub per_node_build: Vec<u64>,
    pub bytes: u64,
    pub output: u64,
    pub parent_column_scans: u64,
    pub wall_micros: u64,
}

impl JoinStats {
    /// Working set of the join: build-table keys plus emitted parents.
    pub fn live_tuples(&self) -> u64 {
        self.build_keys + self.output
    }
}

/// Execution knobs shared by all strategies.
#[derive(Debug, Clone, Copy)]
pub struct JoinOptions {
    /// Receiver-side partitions per node for partitioned hash joins.
    pub workers: usize,
    pub parallelism: Parallelism,
    pub batch_capacity: usize,
}

impl Default for JoinOptions {
    fn default() -> Self {
        Self { workers: 4, parallelism: Parallelism::default(), batch_capacity: DEFAULT_BATCH_CAPACITY }
    }
}

fn field_kind(view: &IndexView, field: &str) -> Option<&'static str> {
    let st = view.field_stats(field);
    match (st.has_text, st.has_numeric) {
        (true, false) => Some("text"),
        (false, true) => Some("numeric"),
        _ => None,
    }
}

/// Planning-time checks: key types must agree and routing joins need the
/// parent key to be its single-valued routing field.
pub fn check_join(snapshot: &Snapshot, input: &JoinInput<'_>, strategy: Strategy) -> Result<()> {
    let parent = snapshot.index(input.parent_index)?;
    let child = snapshot.index(input.child_index)?;
    if input.kind == JoinKind::Semi && !input.projection.is_empty() {
        return Err(JoinError::ProjectionOnSemi);
    }
    if let (Some(p), Some(c)) = (field_kind(parent, input.parent_key), field_kind(child, input.child_key)) {
        if p != c {
            return Err(JoinError::KeyTypeMismatch {
                parent: format!("{}.{}", input.parent_index, input.parent_key),
                parent_kind: p,
                child: format!("{}.{}", input.child_index, input.child_key),
                child_kind: c,
            });
        }
    }
    if strategy == Strategy::Routing {
        routable(parent, input.parent_key)?;
    }
    Ok(())
}

/// Whether a routing join may target `key` on this parent.
pub fn routable(parent: &IndexView, key: &str) -> Result<()> {
    let meta = parent.meta();
    if meta.routing_field != key {
        return Err(JoinError::NotRoutable {
            index: meta.name.clone(),
            routing: meta.routing_field.clone(),
            key: key.to_string(),
        });
    }
    // a doc is routed by its first value only
    if parent.field_stats(key).max_arity > 1 {
        return Err(JoinError::MultiValuedRoutingField { index: meta.name.clone(), field: key.to_string() });
    }
    Ok(())
}

type ChildEntry = (GlobalDocId, Vec<Option<FieldValue>>);

enum Table {
    Semi(HashSet<Key>),
    Inner(HashMap<Key, Vec<ChildEntry>>),
}

impl Table {
    fn build(kind: JoinKind, batches: &[Batch]) -> Table {
        match kind {
            JoinKind::Semi => {
                let mut keys = HashSet::new();
                for b in batches {
                    for r in 0..b.len() {
                        if let Some(k) = b.key_at(0, r) {
                            keys.insert(k);
                        }
                    }
                }
                Table::Semi(keys)
            }
            JoinKind::Inner => {
                let mut map: HashMap<Key, Vec<ChildEntry>> = HashMap::new();
                for b in batches {
                    for t in b.tuples() {
                        let Some(k) = t.values[0].as_ref().and_then(FieldValue::first).map(|v| v.key()) else {
                            continue;
                        };
                        map.entry(k).or_default().push((t.doc, t.values[1..].to_vec()));
                    }
                }
                Table::Inner(map)
            }
        }
    }

    fn keys(&self) -> Vec<&Key> {
        match self {
            Table::Semi(s) => s.iter().collect(),
            Table::Inner(m) => m.keys().collect(),
        }
    }

    fn len(&self) -> usize {
        match self {
            Table::Semi(s) => s.len(),
            Table::Inner(m) => m.len(),
        }
    }

    fn probe(&self, parent: GlobalDocId, key: &Key, out: &mut Fragment) {
        match (self, out) {
            (Table::Semi(s), Fragment::Semi(ids)) => {
                if s.contains(key) {
                    ids.push(parent);
                }
            }
            (Table::Inner(m), Fragment::Inner(rows)) => {
                if let Some(children) = m.get(key) {
                    rows.extend(children.iter().map(|(c, v)| InnerRow { parent, child: *c, values: v.clone() }));
                }
            }
            _ => unreachable!("fragment kind follows table kind"),
        }
    }

    fn merge(tables: Vec<Table>, kind: JoinKind) -> Table {
        let mut acc = match kind {
            JoinKind::Semi => Table::Semi(HashSet::new()),
            JoinKind::Inner => Table::Inner(HashMap::new()),
        };
        for t in tables {
            match (&mut acc, t) {
                (Table::Semi(a), Table::Semi(b)) => a.extend(b),
                (Table::Inner(a), Table::Inner(b)) => {
                    for (k, v) in b {
                        a.entry(k).or_default().extend(v);
                    }
                }
                _ => unreachable!(),
            }
        }
        acc
    }
}

fn empty_fragment(kind: JoinKind) -> Fragment {
    match kind {
        JoinKind::Semi => Fragment::Semi(Vec::new()),
        JoinKind::Inner => Fragment::Inner(Vec::new()),
    }
}

fn key_schema(key: &str, projection: &[String]) -> Arc<[String]> {
    let mut cols = vec![key.to_string()];
    cols.extend(projection.iter().cloned());
    Arc::from(cols)
}

/// Child tuples `(doc, [key, projection...])` per child shard.
fn child_batches(view: &IndexView, input: &JoinInput<'_>, cap: usize) -> Result<Vec<(u16, Vec<Batch>)>> {
    let schema = key_schema(input.child_key, input.projection);
    let mut out = Vec::new();
    for shard in 0..view.meta().shard_count {
        let pairs = view.scan_field_column_shard(shard, input.child_key, Some(input.child_set));
        let mut tuples = Vec::with_capacity(pairs.len());
        for (doc, v) in pairs {
            let mut values = vec![Some(FieldValue::One(v))];
            for f in input.projection {
                values.push(view.value_of(doc, f)?.cloned());
            }
            tuples.push(Tuple::new(doc, values));
        }
        out.push((shard, build_batches(schema.clone(), tuples, cap)?));
    }
    Ok(out)
}

/// Parent key tuples of one shard restricted to the parent set.
fn parent_batches(view: &IndexView, shard: u16, input: &JoinInput<'_>, cap: usize) -> Result<Vec<Batch>> {
    let pairs = view.scan_field_column_shard(shard, input.parent_key, Some(input.parent_set));
    let tuples = pairs.into_iter().map(|(d, v)| Tuple::new(d, vec![Some(FieldValue::One(v))]));
    Ok(build_batches(key_schema(input.parent_key, &[]), tuples, cap)?)
}

fn probe_batches(table: &Table, batches: &[Batch], kind: JoinKind) -> (Fragment, u64) {
    let mut frag = empty_fragment(kind);
    let mut probed = 0;
    for b in batches {
        for r in 0..b.len() {
            probed += 1;
            if let Some(k) = b.key_at(0, r) {
                table.probe(b.doc_ids()[r], &k, &mut frag);
            }
        }
    }
    (frag, probed)
}

fn tuple_count(batches: &[Batch]) -> u64 {
    batches.iter().map(|b| b.len() as u64).sum()
}

/// Runs one join under a fixed strategy.
pub fn execute(
    input: &JoinInput<'_>,
    strategy: Strategy,
    topology: &ClusterTopology,
    opts: &JoinOptions,
) -> Result<(JoinResult, JoinStats)> {
    let started = Instant::now();
    check_join(input.snapshot, input, strategy)?;
    let parent = input.snapshot.index(input.parent_index)?;
    let child = input.snapshot.index(input.child_index)?;
    let mut stats = JoinStats {
        strategy: Some(strategy),
        per_node_build: vec![0; topology.node_count() as usize],
        ..JoinStats::default()
    };
    if input.child_set.is_empty() || input.parent_set.is_empty() {
        let result = group_sort_output(input.kind, Vec::new());
        stats.wall_micros = started.elapsed().as_micros() as u64;
        return Ok((result, stats));
    }
    let scans_before = parent.counters().column_scans();
    let cap = opts.batch_capacity.max(1);
    let children = child_batches(child, input, cap)?;
    stats.child_tuples = children.iter().map(|(_, b)| tuple_count(b)).sum();

    let fragments = match strategy {
        Strategy::BroadcastHash | Strategy::BroadcastIndex => {
            broadcast_join(parent, child, input, strategy, topology, opts, &children, &mut stats)?
        }
        Strategy::PartitionedHash => partitioned_join(parent, child, input, topology, opts, &children, &mut stats)?,
        Strategy::Routing => routing_join_inner(parent, child, input, topology, opts, &children, &mut stats)?,
    };
    let result = group_sort_output(input.kind, fragments);
    stats.output = result.len() as u64;
    stats.parent_column_scans = parent.counters().column_scans() - scans_before;
    stats.wall_micros = started.elapsed().as_micros() as u64;
    Ok((result, stats))
}

#[allow(clippy::too_many_arguments)]
fn broadcast_join(
    parent: &IndexView,
    child: &IndexView,
    input: &JoinInput<'_>,
    strategy: Strategy,
    topology: &ClusterTopology,
    opts: &JoinOptions,
    children: &[(u16, Vec<Batch>)],
    stats: &mut JoinStats,
) -> Result<Vec<Fragment>> {
    let receivers: Vec<NodeId> = topology.nodes_hosting(parent.meta()).into_iter().collect();
    let mut received: BTreeMap<NodeId, Vec<Batch>> = BTreeMap::new();
    for (shard, batches) in children {
        if batches.is_empty() {
            continue;
        }
        let sender = topology.node_of(&child.meta().name, *shard);
        let ex = topology.broadcast(sender, batches, &receivers)?;
        stats.bytes += ex.bytes;
        for (node, bs) in ex.streams {
            received.entry(node).or_default().extend(bs);
        }
    }
    let work: Vec<(NodeId, Vec<Batch>)> = received.into_iter().collect();
    for (node, bs) in &work {
        stats.per_node_build[*node as usize] = tuple_count(bs);
    }
    let results = par::map(opts.parallelism, work, |(node, batches)| -> Result<(Fragment, u64, usize)> {
        let table = Table::build(input.kind, &batches);
        let shards = topology.shards_on(parent.meta(), node);
        let mut frag = empty_fragment(input.kind);
        let mut probed = 0;
        match strategy {
            Strategy::BroadcastIndex => {
                let mut keys = table.keys();
                keys.sort();
                for shard in shards {
                    for key in &keys {
                        for doc in parent.term_lookup_shard(shard, input.parent_key, key) {
                            if input.parent_set.contains(doc) {
                                table.probe(doc, key, &mut frag);
                            }
                        }
                    }
                }
            }
            _ => {
                for shard in shards {
                    let pb = parent_batches(parent, shard, input, opts.batch_capacity.max(1))?;
                    let (f, n) = probe_batches(&table, &pb, input.kind);
                    probed += n;
                    append(&mut frag, f);
                }
            }
        }
        Ok((frag, probed, table.len()))
    });
    let mut frags = Vec::new();
    let mut tables_keys = 0;
    for r in results {
        let (f, n, k) = r?;
        stats.probe_tuples += n;
        tables_keys = tables_keys.max(k);
        frags.push(f);
    }
    // every receiver holds the full build side
    stats.build_keys = tables_keys as u64;
    Ok(frags)
}

fn append(into: &mut Fragment, from: Fragment) {
    match (into, from) {
        (Fragment::Semi(a), Fragment::Semi(b)) => a.extend(b),
        (Fragment::Inner(a), Fragment::Inner(b)) => a.extend(b),
        _ => unreachable!(),
    }
}

#[allow(clippy::too_many_arguments)]
fn partitioned_join(
    parent: &IndexView,
    child: &IndexView,
    input: &JoinInput<'_>,
    topology: &ClusterTopology,
    opts: &JoinOptions,
    children: &[(u16, Vec<Batch>)],
    stats: &mut JoinStats,
) -> Result<Vec<Fragment>> {
    let nodes = topology.node_count() as usize;
    let cap = opts.batch_capacity.max(1);
    let mut build: Vec<Vec<Batch>> = vec![Vec::new(); nodes];
    let mut probe: Vec<Vec<Batch>> = vec![Vec::new(); nodes];
    for (shard, batches) in children {
        if batches.is_empty() {
            continue;
        }
        let sender = topology.node_of(&child.meta().name, *shard);
        let ex = topology.partition_exchange(sender, batches, input.child_key)?;
        stats.bytes += ex.bytes;
        for (node, bs) in ex.streams.into_iter().enumerate() {
            build[node].extend(bs);
        }
    }
    for shard in 0..parent.meta().shard_count {
        let pb = parent_batches(parent, shard, input, cap)?;
        if pb.is_empty() {
            continue;
        }
        let sender = topology.node_of(&parent.meta().name, shard);
        let ex = topology.partition_exchange(sender, &pb, input.parent_key)?;
        stats.bytes += ex.bytes;
        for (node, bs) in ex.streams.into_iter().enumerate() {
            probe[node].extend(bs);
        }
    }
    for (node, bs) in build.iter().enumerate() {
        stats.per_node_build[node] = tuple_count(bs);
    }
    let workers = opts.workers.max(1);
    let mut units = Vec::new();
    for (b, p) in build.into_iter().zip(probe) {
        if b.is_empty() || p.is_empty() {
            continue;
        }
        // second-level split into per-worker partitions on the receiver
        let bk = PartitionKey::Hash(input.child_key.to_string());
        let pk = PartitionKey::Hash(input.parent_key.to_string());
        let bparts = radix_partition(&b, workers, &bk)?;
        let pparts = radix_partition(&p, workers, &pk)?;
        units.extend(bparts.into_iter().zip(pparts));
    }
    let results = par::map(opts.parallelism, units, |(b, p)| {
        let table = Table::build(input.kind, &b);
        let (frag, probed) = probe_batches(&table, &p, input.kind);
        (frag, probed, table.len() as u64)
    });
    let mut frags = Vec::with_capacity(results.len());
    for (f, n, k) in results {
        stats.probe_tuples += n;
        stats.build_keys += k;
        frags.push(f);
    }
    Ok(frags)
}

#[allow(clippy::too_many_arguments)]
fn routing_join_inner(
    parent: &IndexView,
    child: &IndexView,
    input: &JoinInput<'_>,
    topology: &ClusterTopology,
    opts: &JoinOptions,
    children: &[(u16, Vec<Batch>)],
    stats: &mut JoinStats,
) -> Result<Vec<Fragment>> {
    let mut per_shard: BTreeMap<u16, Vec<Batch>> = BTreeMap::new();
    for (shard, batches) in children {
        if batches.is_empty() {
            continue;
        }
        let sender = topology.node_of(&child.meta().name, *shard);
        let ex = topology.route_exchange(sender, batches, input.child_key, parent.meta())?;
        stats.bytes += ex.bytes;
        for (ps, bs) in ex.streams {
            per_shard.entry(ps).or_default().extend(bs);
        }
    }
    for (shard, bs) in &per_shard {
        let node = topology.node_of(&parent.meta().name, *shard);
        stats.per_node_build[node as usize] += tuple_count(bs);
    }
    let work: Vec<(u16, Vec<Batch>)> = per_shard.into_iter().collect();
    let results = par::map(opts.parallelism, work, |(shard, batches)| -> Result<(Fragment, u64, Table)> {
        let table = Table::build(input.kind, &batches);
        let pb = parent_batches(parent, shard, input, opts.batch_capacity.max(1))?;
        let (frag, probed) = probe_batches(&table, &pb, input.kind);
        Ok((frag, probed, table))
    });
    let mut frags = Vec::new();
    let mut tables = Vec::new();
    for r in results {
        let (f, n, t) = r?;
        stats.probe_tuples += n;
        frags.push(f);
        tables.push(t);
    }
    // shards receive disjoint key sets
    stats.build_keys = Table::merge(tables, input.kind).len() as u64;
    Ok(frags)
}

/// Resolves both filters of a spec and runs it.
pub fn execute_spec(
    snapshot: &Snapshot,
    spec: &JoinSpec,
    strategy: Strategy,
    topology: &ClusterTopology,
    opts: &JoinOptions,
) -> Result<(JoinResult, JoinStats)> {
    let parent_set = snapshot.eval_filter(&spec.parent.index, &spec.parent.filter)?;
    let child_set = snapshot.eval_filter(&spec.child.index, &spec.child.filter)?;
    let input = JoinInput {
        snapshot,
        parent_index: &spec.parent.index,
        parent_key: &spec.parent.key,
        parent_set: &parent_set,
        child_index: &spec.child.index,
        child_key: &spec.child.key,
        child_set: &child_set,
        kind: spec.kind,
        projection: &spec.projection,
    };
    execute(&input, strategy, topology, opts)
}

pub fn broadcast_hash_join(snapshot: &Snapshot, spec: &JoinSpec, topology: &ClusterTopology) -> Result<JoinResult> {
    Ok(execute_spec(snapshot, spec, Strategy::BroadcastHash, topology, &JoinOptions::default())?.0)
}

pub fn broadcast_index_join(snapshot: &Snapshot, spec: &JoinSpec, topology: &ClusterTopology) -> Result<JoinResult> {
    Ok(execute_spec(snapshot, spec, Strategy::BroadcastIndex, topology, &JoinOptions::default())?.0)
}

pub fn partitioned_hash_join(snapshot: &Snapshot, spec: &JoinSpec, topology: &ClusterTopology) -> Result<JoinResult> {
    Ok(execute_spec(snapshot, spec, Strategy::PartitionedHash, topology, &JoinOptions::default())?.0)
}

pub fn routing_join(snapshot: &Snapshot, spec: &JoinSpec, topology: &ClusterTopology) -> Result<JoinResult> {
    Ok(execute_spec(snapshot, spec, Strategy::Routing, topology, &JoinOptions::default())?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::Store;
    use crate::value::Document;

    /// People, their phones (by ssn) and their call records.
    fn investigation() -> Store {
        let store = Store::new();
        store.create_index("people", 2, "ssn").unwrap();
        store.create_index("phones", 2, "number").unwrap();
        store
            .add_documents(
                "people",
                [("Alice", "S1"), ("Bob", "S2"), ("Charlie", "S3")].map(|(n, s)| Document::new().with("name", n).with("ssn", s)),
            )
            .unwrap();
        store
            .add_documents(
                "phones",
                [("+1", "S1"), ("+2", "S2"), ("+3", "S3"), ("+4", "S9")].map(|(n, s)| Document::new().with("number", n).with("owner", s)),
            )
            .unwrap();
        store.seal_all("people").unwrap();
        store.seal_all("phones").unwrap();
        store
    }

    fn names(snap: &Snapshot, set: &DocSet) -> Vec<String> {
        let docs = snap.materialize_docs("people", &set.to_vec(), Some(&["name".to_string()])).unwrap();
        let mut out: Vec<String> = docs.iter().map(|d| d.get("name").unwrap().first().unwrap().to_string()).collect();
        out.sort();
        out
    }

    #[test]
    fn every_person_owns_a_phone() {
        let store = investigation();
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(2);
        let spec = JoinSpec::semi(JoinSide::new("people", Filter::all(), "ssn"), JoinSide::new("phones", Filter::all(), "owner"));
        for s in [Strategy::BroadcastHash, Strategy::BroadcastIndex, Strategy::PartitionedHash, Strategy::Routing] {
            let (r, _) = execute_spec(&snap, &spec, s, &topo, &JoinOptions::default()).unwrap();
            assert_eq!(names(&snap, r.as_semi().unwrap()), vec!["Alice", "Bob", "Charlie"], "{s}");
        }
    }

    #[test]
    fn empty_child_gives_empty_result_without_scans() {
        let store = investigation();
        let snap = store.snapshot_all();
        let topo = ClusterTopology::new(2);
        let spec = JoinSpec::semi(
            JoinSide::new("people", Filter::all(), "ssn"),
            JoinSide::new("phones", Filter::term("number", "nope"), "owner"),
        );
        let (r, st) = execute_spec(&snap, &spec, Strategy::BroadcastHash, &topo, &JoinOptions::default()).unwrap();
        assert!(r.is_empty());
        assert_eq!(st.parent_column_scans, 0);
    }

    #[test]
    fn routing_rejects_non_routing_key() {
        let store = investigation();
        let snap = store.snapshot_all();
        let spec = JoinSpec::semi(JoinSide::new("people", Filter::all(), "name"), JoinSide::new("phones", Filter::all(), "owner"));
        let err = routing_join(&snap, &spec, &ClusterTopology::new(2)).unwrap_err();
        assert!(matches!(err, JoinError::NotRoutable { .. }));
    }

    #[test]
    fn key_type_mismatch_is_planning_error() {
        let store = Store::new();
        store.create_index("a", 1, "k").unwrap();
        store.create_index("b", 1, "k").unwrap();
        store.add_documents("a", vec![Document::new().with("k", 1)]).unwrap();
        store.add_documents("b", vec![Document::new().with("k", "1")]).unwrap();
        store.seal_all("a").unwrap();
        store.seal_all("b").unwrap();
        let snap = store.snapshot_all();
        let spec = JoinSpec::semi(JoinSide::new("a", Filter::all(), "k"), JoinSide::new("b", Filter::all(), "k"));
        assert!(matches!(
            broadcast_hash_join(&snap, &spec, &ClusterTopology::new(1)),
            Err(JoinError::KeyTypeMismatch { .. })
        ));
    }

    #[test]
    fn inner_rows_one_per_pair() {
        let store = Store::new();
        store.create_index("p", 1, "id").unwrap();
        store.create_index("c", 1, "id").unwrap();
        store.add_documents("p", vec![Document::new().with("id", 1).with("tags", FieldValue::Many(vec!["x".into(), "y".into()]))]).unwrap();
        store.add_documents("c", vec![Document::new().with("id", 7).with("tags", FieldValue::Many(vec!["y".into(), "x".into()]))]).unwrap();
        store.seal_all("p").unwrap();
        store.seal_all("c").unwrap();
        let snap = store.snapshot_all();
        let spec = JoinSpec::inner(JoinSide::new("p", Filter::all(), "tags"), JoinSide::new("c", Filter::all(), "tags"), vec!["id".into()]);
        for s in [Strategy::BroadcastHash, Strategy::BroadcastIndex, Strategy::PartitionedHash] {
            let (r, _) = execute_spec(&snap, &spec, s, &ClusterTopology::new(3), &JoinOptions::default()).unwrap();
            let rows = r.as_inner().unwrap();
            assert_eq!(rows.len(), 1, "{s}");
            assert_eq!(rows[0].values, vec![Some(FieldValue::One(7.into()))]);
        }
    }

    #[test]
    fn group_sort_merges_scattered_fragments() {
        let a = GlobalDocId::new(0, 0, 1);
        let b = GlobalDocId::new(1, 0, 0);
        let c = GlobalDocId::new(0, 0, 5);
        let row = |p, c| InnerRow { parent: p, child: c, values: vec![] };
        let out = group_sort_output(
            JoinKind::Inner,
            vec![Fragment::Inner(vec![row(b, c), row(a, c)]), Fragment::Inner(vec![row(a, b), row(b, c)])],
        );
        let parents: Vec<GlobalDocId> = out.as_inner().unwrap().iter().map(|r| r.parent).collect();
        assert_eq!(parents, vec![a, a, b]);
        let semi = group_sort_output(JoinKind::Semi, vec![Fragment::Semi(vec![a, a]), Fragment::Semi(vec![a])]);
        assert_eq!(semi.len(), 1);
        assert!(group_sort_output(JoinKind::Semi, vec![]).is_empty());
    }
}
