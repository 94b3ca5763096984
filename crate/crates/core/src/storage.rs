// SPDX-License-Identifier: Apache-2.0

//! Log-structured, sharded document store.
//!
//! Documents are appended to a per-shard open segment which becomes
//! visible only once sealed. A sealed [`Segment`] is immutable: it carries
//! a column store, an exact-match term dictionary and a sorted numeric
//! index for every field. Readers go through a [`Snapshot`], which pins the
//! sealed segment lists of each index at acquisition time; later seals and
//! merges never affect it.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::docset::{DocSet, GlobalDocId};
use crate::filter::{Clause, Filter};
use crate::value::{Document, FieldValue, Key, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StorageError {
    #[error("index `{0}` already exists")]
    DuplicateIndex(String),
    #[error("index `{0}` does not exist")]
    UnknownIndex(String),
    #[error("shard_count must be at least 1 (got {0})")]
    InvalidShardCount(usize),
    #[error("shard {shard} out of range for index `{index}`")]
    UnknownShard { index: String, shard: u16 },
    #[error("segment {segment} of shard {shard} is not a sealed segment of `{index}`")]
    NotSealed { index: String, shard: u16, segment: u16 },
    #[error("field `{field}` of `{index}` holds text values; range lookups need a numeric field")]
    NonNumericField { index: String, field: String },
    #[error("document id {0} is stale or unknown in this snapshot")]
    StaleHandle(GlobalDocId),
    #[error("segment id space exhausted in shard {0}")]
    SegmentIdsExhausted(u16),
}

pub type Result<T, E = StorageError> = std::result::Result<T, E>;

/// Per-field statistics computed when a segment is sealed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldStats {
    pub docs_with_field: u64,
    pub values: u64,
    pub max_arity: usize,
    pub has_text: bool,
    pub has_numeric: bool,
    pub distinct_terms: u64,
}

impl FieldStats {
    fn merge(&mut self, other: &FieldStats) {
        self.docs_with_field += other.docs_with_field;
        self.values += other.values;
        self.max_arity = self.max_arity.max(other.max_arity);
        self.has_text |= other.has_text;
        self.has_numeric |= other.has_numeric;
        // upper bound; segments may share terms
        self.distinct_terms += other.distinct_terms;
    }
}

/// An immutable, sealed segment.
#[derive(Debug)]
pub struct Segment {
    shard: u16,
    id: u16,
    len: u32,
    columns: BTreeMap<String, Vec<Option<FieldValue>>>,
    terms: HashMap<String, BTreeMap<Key, Vec<u32>>>,
    numeric: HashMap<String, Vec<(f64, u32)>>,
    stats: HashMap<String, FieldStats>,
}

impl Segment {
    fn build(shard: u16, id: u16, docs: Vec<Document>) -> Segment {
        let len = docs.len() as u32;
        let mut columns: BTreeMap<String, Vec<Option<FieldValue>>> = BTreeMap::new();
        let mut terms: HashMap<String, BTreeMap<Key, Vec<u32>>> = HashMap::new();
        let mut numeric: HashMap<String, Vec<(f64, u32)>> = HashMap::new();
        let mut stats: HashMap<String, FieldStats> = HashMap::new();

        for (ord, doc) in docs.into_iter().enumerate() {
            let ord = ord as u32;
            for (field, value) in doc.fields() {
                let col = columns
                    .entry(field.to_string())
                    .or_insert_with(|| vec![None; len as usize]);
                col[ord as usize] = Some(value.clone());

                let st = stats.entry(field.to_string()).or_default();
                st.docs_with_field += 1;
                st.values += value.len() as u64;
                st.max_arity = st.max_arity.max(value.len());

                let dict = terms.entry(field.to_string()).or_default();
                for v in value.values() {
                    let postings = dict.entry(v.key()).or_default();
                    // a doc listing the same value twice is posted once
                    if postings.last() != Some(&ord) {
                        postings.push(ord);
                    }
                    match v.as_f64() {
                        Some(x) => {
                            st.has_numeric = true;
                            numeric.entry(field.to_string()).or_default().push((x, ord));
                        }
                        None => st.has_text = true,
                    }
                }
            }
        }
        for (field, dict) in &terms {
            stats.get_mut(field).unwrap().distinct_terms = dict.len() as u64;
        }
        for idx in numeric.values_mut() {
            idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        Segment { shard, id, len, columns, terms, numeric, stats }
    }

    pub fn shard(&self) -> u16 {
        self.shard
    }

    pub fn id(&self) -> u16 {
        self.id
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn doc_id(&self, ordinal: u32) -> GlobalDocId {
        GlobalDocId::new(self.shard, self.id, ordinal)
    }

    pub fn field_stats(&self, field: &str) -> Option<&FieldStats> {
        self.stats.get(field)
    }

    pub fn value(&self, field: &str, ordinal: u32) -> Option<&FieldValue> {
        self.columns.get(field)?.get(ordinal as usize)?.as_ref()
    }

    pub fn postings(&self, field: &str, key: &Key) -> &[u32] {
        self.terms
            .get(field)
            .and_then(|d| d.get(key))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    fn terms_of(&self, field: &str) -> Option<&BTreeMap<Key, Vec<u32>>> {
        self.terms.get(field)
    }

    fn range_ordinals(&self, field: &str, clause: &Clause) -> Vec<u32> {
        let Some(idx) = self.numeric.get(field) else {
            return Vec::new();
        };
        let (lo, hi) = match clause {
            Clause::Range { lo, hi, .. } => (*lo, *hi),
            Clause::Term { .. } => return Vec::new(),
        };
        use crate::filter::Bound;
        let start = match lo {
            Bound::Unbounded => 0,
            Bound::Inclusive(v) => idx.partition_point(|e| e.0 < v),
            Bound::Exclusive(v) => idx.partition_point(|e| e.0 <= v),
        };
        let end = match hi {
            Bound::Unbounded => idx.len(),
            Bound::Inclusive(v) => idx.partition_point(|e| e.0 <= v),
            Bound::Exclusive(v) => idx.partition_point(|e| e.0 < v),
        };
        if start >= end {
            return Vec::new();
        }
        let mut ords: Vec<u32> = idx[start..end].iter().map(|e| e.1).collect();
        ords.sort_unstable();
        ords.dedup();
        ords
    }

    fn document(&self, ordinal: u32, fields: Option<&[String]>) -> Document {
        let mut doc = Document::new();
        match fields {
            None => {
                for (name, col) in &self.columns {
                    if let Some(v) = &col[ordinal as usize] {
                        doc.try_insert(name, v.clone()).expect("stored names are nonempty");
                    }
                }
            }
            Some(names) => {
                for name in names {
                    if let Some(v) = self.value(name, ordinal) {
                        doc.try_insert(name, v.clone()).expect("stored names are nonempty");
                    }
                }
            }
        }
        doc
    }
}

/// Static description of an index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMeta {
    pub name: String,
    pub shard_count: u16,
    pub routing_field: String,
}

impl IndexMeta {
    /// Shard owning a routing key: stable 64-bit hash modulo shard count.
    pub fn shard_for_key(&self, key: &Key) -> u16 {
        (key.stable_hash() % u64::from(self.shard_count)) as u16
    }

    /// Documents without a routing value land on shard 0.
    pub fn shard_for_doc(&self, doc: &Document) -> u16 {
        match doc.get(&self.routing_field).and_then(FieldValue::first) {
            Some(v) => self.shard_for_key(&v.key()),
            None => 0,
        }
    }
}

#[derive(Debug, Default)]
struct Shard {
    sealed: Vec<Arc<Segment>>,
    open: Vec<Document>,
    open_id: Option<u16>,
    next_segment: u32,
}

impl Shard {
    fn alloc_segment_id(&mut self, shard: u16) -> Result<u16> {
        if self.next_segment > u32::from(u16::MAX) {
            return Err(StorageError::SegmentIdsExhausted(shard));
        }
        let id = self.next_segment as u16;
        self.next_segment += 1;
        Ok(id)
    }
}

#[derive(Debug)]
struct Index {
    meta: IndexMeta,
    shards: Vec<Shard>,
    epoch: u64,
}

/// The set of indices of one (simulated) cluster.
#[derive(Debug, Default)]
pub struct Store {
    indices: RwLock<BTreeMap<String, Index>>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_index(&self, name: &str, shard_count: usize, routing_field: &str) -> Result<IndexMeta> {
        if shard_count < 1 || shard_count > usize::from(u16::MAX) {
            return Err(StorageError::InvalidShardCount(shard_count));
        }
        let mut indices = self.indices.write().unwrap();
        if indices.contains_key(name) {
            return Err(StorageError::DuplicateIndex(name.to_string()));
        }
        let meta = IndexMeta {
            name: name.to_string(),
            shard_count: shard_count as u16,
            routing_field: routing_field.to_string(),
        };
        let shards = (0..shard_count).map(|_| Shard::default()).collect();
        indices.insert(name.to_string(), Index { meta: meta.clone(), shards, epoch: 0 });
        Ok(meta)
    }

    pub fn index_meta(&self, name: &str) -> Result<IndexMeta> {
        let indices = self.indices.read().unwrap();
        indices
            .get(name)
            .map(|i| i.meta.clone())
            .ok_or_else(|| StorageError::UnknownIndex(name.to_string()))
    }

    pub fn index_names(&self) -> Vec<String> {
        self.indices.read().unwrap().keys().cloned().collect()
    }

    pub fn epoch(&self, name: &str) -> Result<u64> {
        let indices = self.indices.read().unwrap();
        indices
            .get(name)
            .map(|i| i.epoch)
            .ok_or_else(|| StorageError::UnknownIndex(name.to_string()))
    }

    /// Appends documents to the open segments of their routed shards. The
    /// returned ids become readable once the segment is sealed.
    pub fn add_documents(&self, name: &str, docs: impl IntoIterator<Item = Document>) -> Result<Vec<GlobalDocId>> {
        let mut indices = self.indices.write().unwrap();
        let index = indices
            .get_mut(name)
            .ok_or_else(|| StorageError::UnknownIndex(name.to_string()))?;
        let mut ids = Vec::new();
        for doc in docs {
            let shard_id = index.meta.shard_for_doc(&doc);
            let shard = &mut index.shards[shard_id as usize];
            let seg = match shard.open_id {
                Some(id) => id,
                None => {
                    let id = shard.alloc_segment_id(shard_id)?;
                    shard.open_id = Some(id);
                    id
                }
            };
            ids.push(GlobalDocId::new(shard_id, seg, shard.open.len() as u32));
            shard.open.push(doc);
        }
        Ok(ids)
    }

    /// Seals the open segment of a shard. `Ok(None)` signals a no-op on an
    /// empty open segment.
    pub fn seal_segment(&self, name: &str, shard_id: u16) -> Result<Option<u16>> {
        let mut indices = self.indices.write().unwrap();
        let index = indices
            .get_mut(name)
            .ok_or_else(|| StorageError::UnknownIndex(name.to_string()))?;
        let shard = index.shards.get_mut(shard_id as usize).ok_or_else(|| StorageError::UnknownShard {
            index: name.to_string(),
            shard: shard_id,
        })?;
        let Some(seg_id) = shard.open_id.take() else {
            return Ok(None);
        };
        let docs = std::mem::take(&mut shard.open);
        shard.sealed.push(Arc::new(Segment::build(shard_id, seg_id, docs)));
        index.epoch += 1;
        Ok(Some(seg_id))
    }

    /// Seals every nonempty open segment of an index.
    pub fn seal_all(&self, name: &str) -> Result<Vec<(u16, u16)>> {
        let shard_count = self.index_meta(name)?.shard_count;
        let mut sealed = Vec::new();
        for shard in 0..shard_count {
            if let Some(seg) = self.seal_segment(name, shard)? {
                sealed.push((shard, seg));
            }
        }
        Ok(sealed)
    }

    /// Merges sealed segments of one shard into a new segment. Ordinals are
    /// reassigned in `(old segment, old ordinal)` order and the old ids
    /// become stale.
    pub fn merge_segments(&self, name: &str, shard_id: u16, segment_ids: &[u16]) -> Result<u16> {
        let mut indices = self.indices.write().unwrap();
        let index = indices
            .get_mut(name)
            .ok_or_else(|| StorageError::UnknownIndex(name.to_string()))?;
        let shard = index.shards.get_mut(shard_id as usize).ok_or_else(|| StorageError::UnknownShard {
            index: name.to_string(),
            shard: shard_id,
        })?;
        let mut wanted: Vec<u16> = segment_ids.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        for &seg in &wanted {
            if !shard.sealed.iter().any(|s| s.id == seg) {
                return Err(StorageError::NotSealed { index: name.to_string(), shard: shard_id, segment: seg });
            }
        }
        let mut docs = Vec::new();
        for &seg in &wanted {
            let s = shard.sealed.iter().find(|s| s.id == seg).unwrap();
            docs.extend((0..s.len).map(|o| s.document(o, None)));
        }
        let new_id = shard.alloc_segment_id(shard_id)?;
        shard.sealed.retain(|s| !wanted.contains(&s.id));
        shard.sealed.push(Arc::new(Segment::build(shard_id, new_id, docs)));
        index.epoch += 1;
        Ok(new_id)
    }

    pub fn sealed_segment_ids(&self, name: &str, shard_id: u16) -> Result<Vec<u16>> {
        let indices = self.indices.read().unwrap();
        let index = indices.get(name).ok_or_else(|| StorageError::UnknownIndex(name.to_string()))?;
        let shard = index.shards.get(shard_id as usize).ok_or_else(|| StorageError::UnknownShard {
            index: name.to_string(),
            shard: shard_id,
        })?;
        Ok(shard.sealed.iter().map(|s| s.id).collect())
    }

    /// Pins the sealed segments of the named indices.
    pub fn open_snapshot(&self, names: &[&str]) -> Result<Snapshot> {
        let indices = self.indices.read().unwrap();
        let mut views = BTreeMap::new();
        for &name in names {
            let index = indices.get(name).ok_or_else(|| StorageError::UnknownIndex(name.to_string()))?;
            views.insert(name.to_string(), IndexView::capture(index));
        }
        Ok(Snapshot { inner: Arc::new(SnapshotInner { views }) })
    }

    /// Snapshot of every index.
    pub fn snapshot_all(&self) -> Snapshot {
        let indices = self.indices.read().unwrap();
        let views = indices
            .iter()
            .map(|(name, index)| (name.clone(), IndexView::capture(index)))
            .collect();
        Snapshot { inner: Arc::new(SnapshotInner { views }) }
    }
}

/// Read instrumentation for one index inside one snapshot.
#[derive(Debug, Default)]
pub struct AccessCounters {
    pub column_scans: AtomicU64,
    pub term_lookups: AtomicU64,
    pub docs_materialized: AtomicU64,
}

impl AccessCounters {
    pub fn column_scans(&self) -> u64 {
        self.column_scans.load(Ordering::Relaxed)
    }

    pub fn term_lookups(&self) -> u64 {
        self.term_lookups.load(Ordering::Relaxed)
    }
}

/// Frozen view of one index.
#[derive(Debug)]
pub struct IndexView {
    meta: IndexMeta,
    epoch: u64,
    /// sorted by (shard, segment id)
    segments: Vec<Arc<Segment>>,
    counters: AccessCounters,
}

impl IndexView {
    fn capture(index: &Index) -> IndexView {
        let mut segments: Vec<Arc<Segment>> = index.shards.iter().flat_map(|s| s.sealed.iter().cloned()).collect();
        segments.sort_by_key(|s| (s.shard, s.id));
        IndexView { meta: index.meta.clone(), epoch: index.epoch, segments, counters: AccessCounters::default() }
    }

    pub fn meta(&self) -> &IndexMeta {
        &self.meta
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn counters(&self) -> &AccessCounters {
        &self.counters
    }

    pub fn segments(&self) -> &[Arc<Segment>] {
        &self.segments
    }

    pub fn shard_segments(&self, shard: u16) -> impl Iterator<Item = &Arc<Segment>> {
        self.segments.iter().filter(move |s| s.shard == shard)
    }

    pub fn doc_count(&self) -> u64 {
        self.segments.iter().map(|s| u64::from(s.len)).sum()
    }

    pub fn shard_doc_count(&self, shard: u16) -> u64 {
        self.shard_segments(shard).map(|s| u64::from(s.len)).sum()
    }

    pub fn field_stats(&self, field: &str) -> FieldStats {
        let mut out = FieldStats::default();
        for s in &self.segments {
            if let Some(st) = s.field_stats(field) {
                out.merge(st);
            }
        }
        out
    }

    fn segment(&self, shard: u16, id: u16) -> Option<&Arc<Segment>> {
        self.segments
            .binary_search_by_key(&(shard, id), |s| (s.shard, s.id))
            .ok()
            .map(|i| &self.segments[i])
    }

    pub fn all_ids(&self) -> DocSet {
        self.segments.iter().flat_map(|s| (0..s.len).map(|o| s.doc_id(o))).collect()
    }

    pub fn shard_ids(&self, shard: u16) -> DocSet {
        self.shard_segments(shard).flat_map(|s| (0..s.len).map(|o| s.doc_id(o))).collect()
    }

    /// Postings for `key` across the given shard's segments.
    pub fn term_lookup_shard(&self, shard: u16, field: &str, key: &Key) -> Vec<GlobalDocId> {
        self.counters.term_lookups.fetch_add(1, Ordering::Relaxed);
        self.shard_segments(shard)
            .flat_map(|s| s.postings(field, key).iter().map(|&o| s.doc_id(o)))
            .collect()
    }

    pub fn term_lookup(&self, field: &str, key: &Key) -> Vec<GlobalDocId> {
        self.counters.term_lookups.fetch_add(1, Ordering::Relaxed);
        self.segments
            .iter()
            .flat_map(|s| s.postings(field, key).iter().map(|&o| s.doc_id(o)))
            .collect()
    }

    pub fn range_lookup(&self, clause: &Clause) -> Result<Vec<GlobalDocId>> {
        let field = clause.field();
        if self.field_stats(field).has_text {
            return Err(StorageError::NonNumericField { index: self.meta.name.clone(), field: field.to_string() });
        }
        if clause.is_empty_range() {
            return Ok(Vec::new());
        }
        Ok(self
            .segments
            .iter()
            .flat_map(|s| s.range_ordinals(field, clause).into_iter().map(|o| s.doc_id(o)))
            .collect())
    }

    /// One `(id, value)` pair per stored value, in ascending id order.
    pub fn scan_field_column(&self, field: &str, filter: Option<&DocSet>) -> Vec<(GlobalDocId, Scalar)> {
        self.scan_segments(self.segments.iter(), field, filter)
    }

    pub fn scan_field_column_shard(&self, shard: u16, field: &str, filter: Option<&DocSet>) -> Vec<(GlobalDocId, Scalar)> {
        self.scan_segments(self.shard_segments(shard), field, filter)
    }

    fn scan_segments<'a>(
        &self,
        segments: impl Iterator<Item = &'a Arc<Segment>>,
        field: &str,
        filter: Option<&DocSet>,
    ) -> Vec<(GlobalDocId, Scalar)> {
        let mut out = Vec::new();
        for seg in segments {
            self.counters.column_scans.fetch_add(1, Ordering::Relaxed);
            let Some(col) = seg.columns.get(field) else { continue };
            for (ord, cell) in col.iter().enumerate() {
                let Some(v) = cell else { continue };
                let id = seg.doc_id(ord as u32);
                if filter.is_some_and(|f| !f.contains(id)) {
                    continue;
                }
                out.extend(v.values().iter().map(|x| (id, x.clone())));
            }
        }
        out
    }

    /// Values of one field of one document (unscanned point access).
    pub fn value_of(&self, id: GlobalDocId, field: &str) -> Result<Option<&FieldValue>> {
        let seg = self.segment(id.shard, id.segment).ok_or(StorageError::StaleHandle(id))?;
        if id.ordinal >= seg.len {
            return Err(StorageError::StaleHandle(id));
        }
        Ok(seg.value(field, id.ordinal))
    }

    /// Late materialization of the requested fields (`None` = all fields),
    /// returned in id order.
    pub fn materialize_docs(&self, ids: &[GlobalDocId], fields: Option<&[String]>) -> Result<Vec<Document>> {
        let mut sorted = ids.to_vec();
        sorted.sort_unstable();
        let mut out = Vec::with_capacity(sorted.len());
        for id in sorted {
            let seg = self.segment(id.shard, id.segment).ok_or(StorageError::StaleHandle(id))?;
            if id.ordinal >= seg.len {
                return Err(StorageError::StaleHandle(id));
            }
            out.push(seg.document(id.ordinal, fields));
        }
        self.counters.docs_materialized.fetch_add(out.len() as u64, Ordering::Relaxed);
        Ok(out)
    }

    pub fn eval_filter(&self, filter: &Filter) -> Result<DocSet> {
        let mut acc: Option<DocSet> = None;
        for clause in filter.clauses() {
            let ids: DocSet = match clause {
                Clause::Term { field, value } => self.term_lookup(field, value).into_iter().collect(),
                Clause::Range { .. } => self.range_lookup(clause)?.into_iter().collect(),
            };
            acc = Some(match acc {
                None => ids,
                Some(mut a) => {
                    a.intersect_with(&ids);
                    a
                }
            });
            if acc.as_ref().is_some_and(DocSet::is_empty) {
                break;
            }
        }
        Ok(acc.unwrap_or_else(|| self.all_ids()))
    }

    /// Distinct terms of a field across this view (used by estimators).
    pub fn distinct_terms(&self, field: &str) -> u64 {
        if self.segments.len() == 1 {
            return self.segments[0].terms_of(field).map_or(0, |d| d.len() as u64);
        }
        let mut seen = std::collections::HashSet::new();
        for s in &self.segments {
            if let Some(d) = s.terms_of(field) {
                seen.extend(d.keys());
            }
        }
        seen.len() as u64
    }
}

#[derive(Debug)]
struct SnapshotInner {
    views: BTreeMap<String, IndexView>,
}

/// Immutable, cheaply clonable read view over several indices.
#[derive(Debug, Clone)]
pub struct Snapshot {
    inner: Arc<SnapshotInner>,
}

impl Snapshot {
    pub fn index(&self, name: &str) -> Result<&IndexView> {
        self.inner.views.get(name).ok_or_else(|| StorageError::UnknownIndex(name.to_string()))
    }

    pub fn index_names(&self) -> impl Iterator<Item = &str> {
        self.inner.views.keys().map(String::as_str)
    }

    pub fn epoch(&self, name: &str) -> Result<u64> {
        Ok(self.index(name)?.epoch)
    }

    pub fn term_lookup(&self, index: &str, field: &str, value: &Scalar) -> Result<Vec<GlobalDocId>> {
        Ok(self.index(index)?.term_lookup(field, &value.key()))
    }

    pub fn range_lookup(&self, index: &str, clause: &Clause) -> Result<Vec<GlobalDocId>> {
        self.index(index)?.range_lookup(clause)
    }

    pub fn scan_field_column(&self, index: &str, field: &str, filter: Option<&DocSet>) -> Result<Vec<(GlobalDocId, Scalar)>> {
        Ok(self.index(index)?.scan_field_column(field, filter))
    }

    pub fn materialize_docs(&self, index: &str, ids: &[GlobalDocId], fields: Option<&[String]>) -> Result<Vec<Document>> {
        self.index(index)?.materialize_docs(ids, fields)
    }

    pub fn eval_filter(&self, index: &str, filter: &Filter) -> Result<DocSet> {
        self.index(index)?.eval_filter(filter)
    }

    pub fn doc_count(&self, index: &str) -> Result<u64> {
        Ok(self.index(index)?.doc_count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::Bound;

    fn people_store() -> Store {
        let store = Store::new();
        store.create_index("people", 1, "ssn").unwrap();
        store
            .add_documents(
                "people",
                vec![
                    Document::new().with("name", "Alice").with("ssn", "S1"),
                    Document::new().with("name", "Bob").with("ssn", "S2"),
                    Document::new().with("name", "Charlie").with("ssn", "S3"),
                ],
            )
            .unwrap();
        store.seal_all("people").unwrap();
        store
    }

    #[test]
    fn create_index_edges() {
        let store = Store::new();
        let meta = store.create_index("cdr", 8, "caller").unwrap();
        assert_eq!(meta.shard_count, 8);
        assert_eq!(store.epoch("cdr").unwrap(), 0);
        assert_eq!(store.create_index("cdr", 1, "x"), Err(StorageError::DuplicateIndex("cdr".into())));
        assert_eq!(store.create_index("z", 0, "x"), Err(StorageError::InvalidShardCount(0)));
        let snap = store.open_snapshot(&["cdr"]).unwrap();
        assert_eq!(snap.doc_count("cdr").unwrap(), 0);
    }

    #[test]
    fn first_insert_and_ordering() {
        let store = Store::new();
        store.create_index("p", 1, "k").unwrap();
        let ids = store.add_documents("p", vec![Document::new().with("k", 1)]).unwrap();
        assert_eq!(ids, vec![GlobalDocId::new(0, 0, 0)]);
        let ids = store
            .add_documents("p", vec![Document::new().with("k", 2), Document::new().with("k", 3)])
            .unwrap();
        assert_eq!(ids, vec![GlobalDocId::new(0, 0, 1), GlobalDocId::new(0, 0, 2)]);
    }

    #[test]
    fn routing_spreads_keys() {
        let store = Store::new();
        store.create_index("p", 4, "k").unwrap();
        let docs = (0..1000).map(|i| Document::new().with("k", format!("k{i}")));
        let ids = store.add_documents("p", docs).unwrap();
        let mut counts = [0usize; 4];
        for id in ids {
            counts[id.shard as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 - 250.0).abs() <= 0.35 * 250.0, "{counts:?}");
        }
    }

    #[test]
    fn seal_bumps_epoch_and_second_seal_is_noop() {
        let store = Store::new();
        store.create_index("p", 1, "k").unwrap();
        store.add_documents("p", vec![Document::new().with("k", 1), Document::new().with("k", 2)]).unwrap();
        assert_eq!(store.seal_segment("p", 0).unwrap(), Some(0));
        assert_eq!(store.epoch("p").unwrap(), 1);
        assert_eq!(store.seal_segment("p", 0).unwrap(), None);
        assert_eq!(store.epoch("p").unwrap(), 1);
        let snap = store.open_snapshot(&["p"]).unwrap();
        assert_eq!(snap.index("p").unwrap().segments()[0].len(), 2);
    }

    #[test]
    fn unsealed_docs_invisible() {
        let store = people_store();
        store.add_documents("people", vec![Document::new().with("ssn", "S9")]).unwrap();
        let snap = store.open_snapshot(&["people"]).unwrap();
        assert_eq!(snap.doc_count("people").unwrap(), 3);
        assert!(snap.term_lookup("people", "ssn", &"S9".into()).unwrap().is_empty());
    }

    #[test]
    fn term_lookup_finds_alice() {
        let store = people_store();
        let snap = store.open_snapshot(&["people"]).unwrap();
        let hits = snap.term_lookup("people", "ssn", &"S1".into()).unwrap();
        assert_eq!(hits, vec![GlobalDocId::new(0, 0, 0)]);
        let docs = snap.materialize_docs("people", &hits, Some(&["name".to_string()])).unwrap();
        assert_eq!(docs, vec![Document::new().with("name", "Alice")]);
        assert!(snap.term_lookup("people", "ssn", &"nope".into()).unwrap().is_empty());
        assert!(snap.materialize_docs("people", &[], None).unwrap().is_empty());
    }

    #[test]
    fn multi_valued_posting_once() {
        let store = Store::new();
        store.create_index("p", 1, "id").unwrap();
        store
            .add_documents("p", vec![Document::new().with("id", 1).with("phone", FieldValue::Many(vec!["+1".into(), "+1".into(), "+2".into()]))])
            .unwrap();
        store.seal_all("p").unwrap();
        let snap = store.open_snapshot(&["p"]).unwrap();
        assert_eq!(snap.term_lookup("p", "phone", &"+1".into()).unwrap().len(), 1);
        // scan emits one pair per stored value
        assert_eq!(snap.scan_field_column("p", "phone", None).unwrap().len(), 3);
    }

    #[test]
    fn exclusive_range_lookup() {
        let store = Store::new();
        store.create_index("e", 1, "id").unwrap();
        store
            .add_documents("e", [10, 15, 20].map(|t| Document::new().with("createTime", t as i64)))
            .unwrap();
        store.seal_all("e").unwrap();
        let snap = store.open_snapshot(&["e"]).unwrap();
        let c = Clause::range("createTime", Bound::Exclusive(10.0), Bound::Exclusive(20.0));
        assert_eq!(snap.range_lookup("e", &c).unwrap(), vec![GlobalDocId::new(0, 0, 1)]);
        let empty = Clause::range("createTime", Bound::Inclusive(20.0), Bound::Inclusive(10.0));
        assert!(snap.range_lookup("e", &empty).unwrap().is_empty());
    }

    #[test]
    fn range_on_text_field_errors() {
        let store = people_store();
        let snap = store.open_snapshot(&["people"]).unwrap();
        let c = Clause::range("name", Bound::Unbounded, Bound::Unbounded);
        assert!(matches!(snap.range_lookup("people", &c), Err(StorageError::NonNumericField { .. })));
    }

    #[test]
    fn merge_reassigns_and_stales_old_ids() {
        let store = Store::new();
        store.create_index("p", 1, "k").unwrap();
        store.add_documents("p", (0..2).map(|i| Document::new().with("v", i as i64))).unwrap();
        store.seal_segment("p", 0).unwrap();
        let old = store.add_documents("p", (2..5).map(|i| Document::new().with("v", i as i64))).unwrap();
        store.seal_segment("p", 0).unwrap();
        let before = store.open_snapshot(&["p"]).unwrap();
        let epoch = store.epoch("p").unwrap();
        let merged = store.merge_segments("p", 0, &[1, 0]).unwrap();
        assert!(store.epoch("p").unwrap() > epoch);
        let after = store.open_snapshot(&["p"]).unwrap();
        let view = after.index("p").unwrap();
        assert_eq!(view.segments().len(), 1);
        assert_eq!(view.segments()[0].id(), merged);
        let vals: Vec<Scalar> = view.scan_field_column("v", None).into_iter().map(|p| p.1).collect();
        assert_eq!(vals, (0..5).map(Scalar::Int).collect::<Vec<_>>());
        assert!(matches!(after.materialize_docs("p", &old[..1], None), Err(StorageError::StaleHandle(_))));
        // the old snapshot still resolves the old ids
        assert_eq!(before.materialize_docs("p", &old, None).unwrap().len(), 3);
    }

    #[test]
    fn merge_rejects_unsealed() {
        let store = Store::new();
        store.create_index("p", 1, "k").unwrap();
        store.add_documents("p", vec![Document::new().with("k", 1)]).unwrap();
        assert!(matches!(store.merge_segments("p", 0, &[0]), Err(StorageError::NotSealed { .. })));
    }

    #[test]
    fn snapshot_isolation_simple() {
        let store = people_store();
        let snap = store.open_snapshot(&["people"]).unwrap();
        store.add_documents("people", (0..10).map(|i| Document::new().with("ssn", format!("X{i}")))).unwrap();
        store.seal_all("people").unwrap();
        assert_eq!(snap.doc_count("people").unwrap(), 3);
        let later = store.open_snapshot(&["people"]).unwrap();
        assert_eq!(later.doc_count("people").unwrap(), 13);
    }
}
