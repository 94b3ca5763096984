// SPDX-License-Identifier: Apache-2.0

//! Columnar tuple batches and the simulated cluster exchange operators.
//!
//! A [`Batch`] carries a `GlobalDocId` column plus named value columns.
//! Exchange operators move batches between nodes of a
//! [`ClusterTopology`] and charge every non-local delivery to the
//! sender/receiver channel counter: 8 bytes per doc id plus the encoded
//! length of each value (8 for numbers, UTF-8 length for text).

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::docset::GlobalDocId;
use crate::par::{self, Parallelism};
use crate::storage::{IndexMeta, Segment};
use crate::value::{FieldValue, Key};

pub type NodeId = u32;

pub const DEFAULT_BATCH_CAPACITY: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExchangeError {
    #[error("batch capacity must be at least 1")]
    ZeroCapacity,
    #[error("partition count must be at least 1")]
    ZeroPartitions,
    #[error("column `{0}` is not present in the batch")]
    MissingColumn(String),
    #[error("node {node} outside topology of {nodes} nodes")]
    UnknownNode { node: NodeId, nodes: u32 },
    #[error("receiver list is empty")]
    NoReceivers,
}

pub type Result<T, E = ExchangeError> = std::result::Result<T, E>;

/// One row: a document id plus values aligned with the batch schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Tuple {
    pub doc: GlobalDocId,
    pub values: Vec<Option<FieldValue>>,
}

impl Tuple {
    pub fn new(doc: GlobalDocId, values: Vec<Option<FieldValue>>) -> Self {
        Self { doc, values }
    }

    pub fn encoded_len(&self) -> u64 {
        8 + self.values.iter().flatten().map(FieldValue::encoded_len).sum::<u64>()
    }
}

/// Fixed-capacity columnar block of tuples. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    capacity: usize,
    schema: Arc<[String]>,
    doc_ids: Vec<GlobalDocId>,
    columns: Vec<Vec<Option<FieldValue>>>,
}

impl Batch {
    pub fn schema(&self) -> &Arc<[String]> {
        &self.schema
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[GlobalDocId] {
        &self.doc_ids
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<&[Option<FieldValue>]> {
        self.column_index(name).map(|i| self.columns[i].as_slice())
    }

    pub fn tuple(&self, row: usize) -> Tuple {
        Tuple::new(self.doc_ids[row], self.columns.iter().map(|c| c[row].clone()).collect())
    }

    pub fn tuples(&self) -> impl Iterator<Item = Tuple> + '_ {
        (0..self.len()).map(|r| self.tuple(r))
    }

    pub fn serialized_bytes(&self) -> u64 {
        let values: u64 = self
            .columns
            .iter()
            .flat_map(|c| c.iter().flatten())
            .map(FieldValue::encoded_len)
            .sum();
        8 * self.doc_ids.len() as u64 + values
    }

    /// First value of a column cell as a join key.
    pub fn key_at(&self, col: usize, row: usize) -> Option<Key> {
        self.columns[col][row].as_ref().and_then(FieldValue::first).map(|v| v.key())
    }
}

/// Packs tuples into batches of `capacity`; every batch but the last is full.
pub fn build_batches(schema: Arc<[String]>, tuples: impl IntoIterator<Item = Tuple>, capacity: usize) -> Result<Vec<Batch>> {
    if capacity == 0 {
        return Err(ExchangeError::ZeroCapacity);
    }
    let width = schema.len();
    let fresh = |schema: &Arc<[String]>| Batch {
        capacity,
        schema: schema.clone(),
        doc_ids: Vec::with_capacity(capacity),
        columns: vec![Vec::with_capacity(capacity); width],
    };
    let mut out = Vec::new();
    let mut cur = fresh(&schema);
    for t in tuples {
        debug_assert_eq!(t.values.len(), width);
        cur.doc_ids.push(t.doc);
        for (col, v) in cur.columns.iter_mut().zip(t.values) {
            col.push(v);
        }
        if cur.len() == capacity {
            out.push(std::mem::replace(&mut cur, fresh(&schema)));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn flatten(batches: &[Batch]) -> Vec<Tuple> {
    batches.iter().flat_map(Batch::tuples).collect()
}

fn rebatch_like(template: &[Batch], tuples: Vec<Tuple>) -> Vec<Batch> {
    match template.first() {
        Some(b) => build_batches(b.schema.clone(), tuples, b.capacity).expect("capacity >= 1"),
        None => Vec::new(),
    }
}

/// How [`radix_partition`] assigns tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionKey {
    /// Contiguous doc-id ranges; partition order follows id order.
    DocIdRange,
    /// Stable hash of the first value of a column.
    Hash(String),
}

/// Splits a stream into `partitions` streams. Relative order inside a
/// partition is preserved.
pub fn radix_partition(batches: &[Batch], partitions: usize, key: &PartitionKey) -> Result<Vec<Vec<Batch>>> {
    if partitions == 0 {
        return Err(ExchangeError::ZeroPartitions);
    }
    let mut buckets: Vec<Vec<Tuple>> = vec![Vec::new(); partitions];
    match key {
        PartitionKey::DocIdRange => {
            let (lo, hi) = batches
                .iter()
                .flat_map(|b| b.doc_ids.iter())
                .fold((u64::MAX, 0u64), |(lo, hi), id| (lo.min(id.to_u64()), hi.max(id.to_u64())));
            let span = hi.saturating_sub(lo) as u128 + 1;
            for b in batches {
                for t in b.tuples() {
                    let off = (t.doc.to_u64() - lo) as u128;
                    let p = (off * partitions as u128 / span) as usize;
                    buckets[p].push(t);
                }
            }
        }
        PartitionKey::Hash(col) => {
            for b in batches {
                let ci = b.column_index(col).ok_or_else(|| ExchangeError::MissingColumn(col.clone()))?;
                for r in 0..b.len() {
                    let h = b.key_at(ci, r).map_or(0, |k| k.stable_hash());
                    buckets[(h % partitions as u64) as usize].push(b.tuple(r));
                }
            }
        }
    }
    Ok(buckets.into_iter().map(|ts| rebatch_like(batches, ts)).collect())
}

/// Globally sorts a stream by doc id (stable): doc-id range partitioning,
/// then an independent sort per partition.
pub fn sort_batches_by_docid(batches: &[Batch], mode: Parallelism) -> Vec<Batch> {
    if batches.is_empty() {
        return Vec::new();
    }
    let n: usize = batches.iter().map(Batch::len).sum();
    let parts = (n / 4096).clamp(1, 64);
    let partitioned = radix_partition(batches, parts, &PartitionKey::DocIdRange).expect("parts >= 1");
    let sorted: Vec<Vec<Tuple>> = par::map(mode, partitioned, |p| {
        let mut ts = flatten(&p);
        ts.sort_by_key(|t| t.doc);
        ts
    });
    rebatch_like(batches, sorted.into_iter().flatten().collect())
}

/// Contiguous slice of one segment; the unit of parallel scan work.
#[derive(Debug, Clone)]
pub struct Morsel {
    pub segment: Arc<Segment>,
    pub ordinals: Range<u32>,
}

/// Cuts segments into morsels of at most `max_size` documents. The morsels
/// of one call cover every ordinal exactly once.
pub fn morsels<'a>(segments: impl IntoIterator<Item = &'a Arc<Segment>>, max_size: u32) -> Vec<Morsel> {
    let max_size = max_size.max(1);
    let mut out = Vec::new();
    for seg in segments {
        let mut start = 0;
        while start < seg.len() {
            let end = (start + max_size).min(seg.len());
            out.push(Morsel { segment: seg.clone(), ordinals: start..end });
            start = end;
        }
    }
    out
}

/// Nodes, shard placement and per-channel byte counters.
#[derive(Debug)]
pub struct ClusterTopology {
    nodes: u32,
    placement: BTreeMap<String, Vec<NodeId>>,
    channels: Vec<AtomicU64>,
}

impl ClusterTopology {
    /// `nodes` nodes; shards are placed round-robin (`shard % nodes`) unless
    /// overridden with [`ClusterTopology::with_placement`].
    pub fn new(nodes: u32) -> Self {
        let nodes = nodes.max(1);
        let channels = (0..nodes * nodes).map(|_| AtomicU64::new(0)).collect();
        Self { nodes, placement: BTreeMap::new(), channels }
    }

    pub fn with_placement(mut self, index: &str, shard_nodes: Vec<NodeId>) -> Result<Self> {
        if let Some(&bad) = shard_nodes.iter().find(|&&n| n >= self.nodes) {
            return Err(ExchangeError::UnknownNode { node: bad, nodes: self.nodes });
        }
        self.placement.insert(index.to_string(), shard_nodes);
        Ok(self)
    }

    pub fn node_count(&self) -> u32 {
        self.nodes
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.nodes
    }

    pub fn node_of(&self, index: &str, shard: u16) -> NodeId {
        match self.placement.get(index).and_then(|p| p.get(shard as usize)) {
            Some(&n) => n,
            None => u32::from(shard) % self.nodes,
        }
    }

    pub fn nodes_hosting(&self, meta: &IndexMeta) -> BTreeSet<NodeId> {
        (0..meta.shard_count).map(|s| self.node_of(&meta.name, s)).collect()
    }

    pub fn shards_on(&self, meta: &IndexMeta, node: NodeId) -> Vec<u16> {
        (0..meta.shard_count).filter(|&s| self.node_of(&meta.name, s) == node).collect()
    }

    /// Local deliveries are free.
    pub fn record(&self, from: NodeId, to: NodeId, bytes: u64) {
        if from != to && bytes > 0 {
            self.channels[(from * self.nodes + to) as usize].fetch_add(bytes, Ordering::Relaxed);
        }
    }

    pub fn network_stats(&self) -> NetworkStats {
        let mut per_channel = BTreeMap::new();
        let mut total = 0;
        for from in 0..self.nodes {
            for to in 0..self.nodes {
                let b = self.channels[(from * self.nodes + to) as usize].load(Ordering::Relaxed);
                if b > 0 {
                    per_channel.insert((from, to), b);
                    total += b;
                }
            }
        }
        NetworkStats { per_channel, total }
    }

    pub fn total_bytes(&self) -> u64 {
        self.channels.iter().map(|c| c.load(Ordering::Relaxed)).sum()
    }

    fn check_node(&self, node: NodeId) -> Result<()> {
        if node >= self.nodes {
            return Err(ExchangeError::UnknownNode { node, nodes: self.nodes });
        }
        Ok(())
    }

    /// Sends the whole stream to every receiver.
    pub fn broadcast(&self, sender: NodeId, batches: &[Batch], receivers: &[NodeId]) -> Result<Exchanged<BTreeMap<NodeId, Vec<Batch>>>> {
        if receivers.is_empty() {
            return Err(ExchangeError::NoReceivers);
        }
        self.check_node(sender)?;
        for &r in receivers {
            self.check_node(r)?;
        }
        let size: u64 = batches.iter().map(Batch::serialized_bytes).sum();
        let mut out = BTreeMap::new();
        let mut bytes = 0;
        for &r in receivers {
            if r != sender {
                bytes += size;
            }
            self.record(sender, r, size);
            out.insert(r, batches.to_vec());
        }
        Ok(Exchanged { streams: out, bytes })
    }

    /// Hash-partitions a stream across all nodes on `key_column`.
    pub fn partition_exchange(&self, sender: NodeId, batches: &[Batch], key_column: &str) -> Result<Exchanged<Vec<Vec<Batch>>>> {
        self.check_node(sender)?;
        let parts = radix_partition(batches, self.nodes as usize, &PartitionKey::Hash(key_column.to_string()))?;
        let mut bytes = 0;
        for (node, part) in parts.iter().enumerate() {
            let size = part.iter().map(Batch::serialized_bytes).sum();
            if node as NodeId != sender {
                bytes += size;
            }
            self.record(sender, node as NodeId, size);
        }
        Ok(Exchanged { streams: parts, bytes })
    }

    /// Delivers each tuple to the node hosting the parent shard its key
    /// routes to, using the parent's routing function. Output is keyed by
    /// parent shard.
    pub fn route_exchange(&self, sender: NodeId, batches: &[Batch], key_column: &str, parent: &IndexMeta) -> Result<Exchanged<BTreeMap<u16, Vec<Batch>>>> {
        self.check_node(sender)?;
        let mut per_shard: BTreeMap<u16, Vec<Tuple>> = BTreeMap::new();
        let mut bytes = 0;
        for b in batches {
            let ci = b.column_index(key_column).ok_or_else(|| ExchangeError::MissingColumn(key_column.to_string()))?;
            for r in 0..b.len() {
                let shard = b.key_at(ci, r).map_or(0, |k| parent.shard_for_key(&k));
                let t = b.tuple(r);
                let to = self.node_of(&parent.name, shard);
                if to != sender {
                    bytes += t.encoded_len();
                }
                self.record(sender, to, t.encoded_len());
                per_shard.entry(shard).or_default().push(t);
            }
        }
        let streams = per_shard.into_iter().map(|(s, ts)| (s, rebatch_like(batches, ts))).collect();
        Ok(Exchanged { streams, bytes })
    }
}

/// Output of one exchange call plus the network bytes it charged.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchanged<T> {
    pub streams: T,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct NetworkStats {
    pub per_channel: BTreeMap<(NodeId, NodeId), u64>,
    pub total: u64,
}
