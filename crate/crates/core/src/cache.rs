// SPDX-License-Identifier: Apache-2.0

//! Semantic cache of semi-join results.
//!
//! Entries are keyed by the canonical text of an operator subtree and are
//! valid only while the epochs of every referenced index match those
//! recorded in the key. Values are immutable [`DocSet`] handles. Eviction
//! is least-recently-used under a byte budget measured on the compressed
//! bitset size.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::docset::DocSet;
use crate::storage::{Snapshot, StorageError};

/// Canonical subtree text plus the epoch of each index it references.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SemanticKey {
    canonical: String,
    epochs: BTreeMap<String, u64>,
}

impl SemanticKey {
    pub fn new(canonical: impl Into<String>, epochs: BTreeMap<String, u64>) -> Self {
        Self { canonical: canonical.into(), epochs }
    }

    /// Reads the epochs of `indices` from a snapshot.
    pub fn at<'a>(canonical: impl Into<String>, indices: impl IntoIterator<Item = &'a str>, snapshot: &Snapshot) -> Result<Self, StorageError> {
        let mut epochs = BTreeMap::new();
        for name in indices {
            epochs.insert(name.to_string(), snapshot.epoch(name)?);
        }
        Ok(Self::new(canonical, epochs))
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn epochs(&self) -> &BTreeMap<String, u64> {
        &self.epochs
    }

    pub fn references(&self, index: &str) -> bool {
        self.epochs.contains_key(index)
    }
}

impl std::fmt::Display for SemanticKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.canonical)?;
        f.write_str(" @")?;
        for (i, (name, e)) in self.epochs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{name}:{e}")?;
        }
        Ok(())
    }
}

/// How a query uses the cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    #[default]
    On,
    /// No cache attached.
    Off,
    /// Cache attached but skipped: no lookups, no inserts.
    Bypass,
}

impl std::str::FromStr for CacheMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on" => Ok(CacheMode::On),
            "off" => Ok(CacheMode::Off),
            "bypass" => Ok(CacheMode::Bypass),
            other => Err(format!("unknown cache mode `{other}` (expected on|off|bypass)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
    pub stale_purges: u64,
    pub oversize_skips: u64,
    pub semi_joins_computed: u64,
    pub entries: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PutOutcome {
    Stored,
    /// The value alone exceeds the budget.
    Oversize,
}

#[derive(Debug)]
struct Entry {
    epochs: BTreeMap<String, u64>,
    value: Arc<DocSet>,
    size: usize,
    tick: u64,
}

#[derive(Debug, Default)]
struct Inner {
    entries: HashMap<String, Entry>,
    lru: BTreeMap<u64, String>,
    tick: u64,
    used: usize,
}

impl Inner {
    fn remove(&mut self, canonical: &str) -> Option<Entry> {
        let e = self.entries.remove(canonical)?;
        self.lru.remove(&e.tick);
        self.used -= e.size;
        Some(e)
    }

    fn touch(&mut self, canonical: &str) {
        self.tick += 1;
        let tick = self.tick;
        let e = self.entries.get_mut(canonical).expect("present");
        self.lru.remove(&e.tick);
        e.tick = tick;
        self.lru.insert(tick, canonical.to_string());
    }
}

#[derive(Debug)]
pub struct SemanticCache {
    budget: usize,
    inner: Mutex<Inner>,
    hits: AtomicU64,
    misses: AtomicU64,
    evictions: AtomicU64,
    stale_purges: AtomicU64,
    oversize: AtomicU64,
    computed: AtomicU64,
}

pub const DEFAULT_BUDGET_BYTES: usize = 64 << 20;

impl Default for SemanticCache {
    fn default() -> Self {
        Self::new(DEFAULT_BUDGET_BYTES)
    }
}

/// Stored size of an entry: compressed bitset plus its key text.
fn entry_size(key: &SemanticKey, value: &DocSet) -> usize {
    value.size_bytes() + key.canonical.len()
}

impl SemanticCache {
    pub fn new(budget_bytes: usize) -> Self {
        Self {
            budget: budget_bytes,
            inner: Mutex::new(Inner::default()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            evictions: AtomicU64::new(0),
            stale_purges: AtomicU64::new(0),
            oversize: AtomicU64::new(0),
            computed: AtomicU64::new(0),
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Hit iff present with an identical epoch vector. A stale entry is
    /// purged under the same lock that reports the miss.
    pub fn get(&self, key: &SemanticKey) -> Option<Arc<DocSet>> {
        let mut inner = self.inner.lock().unwrap();
        let fresh = inner.entries.get(&key.canonical).map(|e| e.epochs == key.epochs);
        match fresh {
            Some(true) => {
                inner.touch(&key.canonical);
                self.hits.fetch_add(1, Ordering::Relaxed);
                Some(inner.entries[&key.canonical].value.clone())
            }
            Some(false) => {
                inner.remove(&key.canonical);
                self.stale_purges.fetch_add(1, Ordering::Relaxed);
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    pub fn put(&self, key: &SemanticKey, value: DocSet) -> PutOutcome {
        let size = entry_size(key, &value);
        if size > self.budget {
            self.oversize.fetch_add(1, Ordering::Relaxed);
            return PutOutcome::Oversize;
        }
        let mut inner = self.inner.lock().unwrap();
        inner.remove(&key.canonical);
        while inner.used + size > self.budget {
            let (_, victim) = inner.lru.pop_first().expect("used > 0 implies an entry");
            let e = inner.entries.remove(&victim).expect("lru and map agree");
            inner.used -= e.size;
            self.evictions.fetch_add(1, Ordering::Relaxed);
        }
        inner.tick += 1;
        let tick = inner.tick;
        inner.lru.insert(tick, key.canonical.clone());
        inner.used += size;
        inner.entries.insert(
            key.canonical.clone(),
            Entry { epochs: key.epochs.clone(), value: Arc::new(value), size, tick },
        );
        PutOutcome::Stored
    }

    /// Drops every entry referencing `index`; returns how many.
    pub fn invalidate(&self, index: &str) -> usize {
        let mut inner = self.inner.lock().unwrap();
        let victims: Vec<String> = inner
            .entries
            .iter()
            .filter(|(_, e)| e.epochs.contains_key(index))
            .map(|(k, _)| k.clone())
            .collect();
        for v in &victims {
            inner.remove(v);
        }
        victims.len()
    }

    pub fn clear(&self) {
        *self.inner.lock().unwrap() = Inner::default();
    }

    /// Counts one executed semi-join (cache misses and uncached runs).
    pub fn record_semi_join_computed(&self) {
        self.computed.fetch_add(1, Ordering::Relaxed);
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn used_bytes(&self) -> usize {
        self.inner.lock().unwrap().used
    }

    pub fn stats(&self) -> CacheStats {
        let inner = self.inner.lock().unwrap();
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            evictions: self.evictions.load(Ordering::Relaxed),
            stale_purges: self.stale_purges.load(Ordering::Relaxed),
            oversize_skips: self.oversize.load(Ordering::Relaxed),
            semi_joins_computed: self.computed.load(Ordering::Relaxed),
            entries: inner.entries.len() as u64,
            bytes: inner.used as u64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docset::GlobalDocId;

    fn key(name: &str, epoch: u64) -> SemanticKey {
        SemanticKey::new(name, BTreeMap::from([("a".to_string(), epoch)]))
    }

    fn set(n: u32) -> DocSet {
        (0..n).map(|i| GlobalDocId::new(0, 0, i)).collect()
    }

    #[test]
    fn put_get_and_stale_epoch() {
        let c = SemanticCache::default();
        c.put(&key("q", 1), set(3));
        assert_eq!(*c.get(&key("q", 1)).unwrap(), set(3));
        assert!(c.get(&key("q", 2)).is_none());
        // the stale entry is gone, even for the old epoch
        assert!(c.get(&key("q", 1)).is_none());
        let st = c.stats();
        assert_eq!((st.hits, st.misses, st.stale_purges), (1, 2, 1));
    }

    #[test]
    fn oversize_not_stored() {
        let c = SemanticCache::new(8);
        assert_eq!(c.put(&key("q", 1), set(100)), PutOutcome::Oversize);
        assert!(c.is_empty());
        assert_eq!(c.stats().oversize_skips, 1);
    }

    #[test]
    fn lru_eviction() {
        let one = entry_size(&key("k1", 0), &set(10));
        let c = SemanticCache::new(2 * one);
        c.put(&key("k1", 0), set(10));
        c.put(&key("k2", 0), set(10));
        c.get(&key("k1", 0));
        c.put(&key("k3", 0), set(10));
        assert!(c.get(&key("k2", 0)).is_none());
        assert!(c.get(&key("k1", 0)).is_some());
        assert!(c.get(&key("k3", 0)).is_some());
        assert_eq!(c.stats().evictions, 1);
        assert!(c.used_bytes() <= c.budget());
    }

    #[test]
    fn reput_overwrites() {
        let c = SemanticCache::default();
        c.put(&key("q", 0), set(1));
        c.put(&key("q", 0), set(2));
        assert_eq!(c.len(), 1);
        assert_eq!(c.get(&key("q", 0)).unwrap().len(), 2);
    }

    #[test]
    fn invalidate_counts_referencing_entries() {
        let c = SemanticCache::default();
        assert_eq!(c.invalidate("a"), 0);
        for i in 0..3 {
            c.put(&key(&format!("a{i}"), 0), set(1));
        }
        for i in 0..2 {
            c.put(&SemanticKey::new(format!("b{i}"), BTreeMap::from([("b".to_string(), 0)])), set(1));
        }
        assert_eq!(c.invalidate("a"), 3);
        assert_eq!(c.len(), 2);
    }

    mod model {
        use super::*;
        use proptest::prelude::*;
        use std::collections::HashMap;

        #[derive(Debug, Clone)]
        enum Op {
            Put(u8, u64, u32),
            Get(u8, u64),
        }

        fn op() -> impl Strategy<Value = Op> {
            prop_oneof![
                (0u8..6, 0u64..3, 0u32..40).prop_map(|(k, e, n)| Op::Put(k, e, n)),
                (0u8..6, 0u64..3).prop_map(|(k, e)| Op::Get(k, e)),
            ]
        }

        proptest! {
            // a hit only ever returns the last value stored under the exact
            // same canonical string and epoch vector
            #[test]
            fn hits_are_never_stale(ops in proptest::collection::vec(op(), 1..120), budget in 64usize..4096) {
                let c = SemanticCache::new(budget);
                let mut last: HashMap<u8, (u64, u32)> = HashMap::new();
                for o in ops {
                    match o {
                        Op::Put(k, e, n) => {
                            // an oversize put is skipped and leaves any older entry in place
                            if c.put(&key(&format!("q{k}"), e), set(n)) == PutOutcome::Stored {
                                last.insert(k, (e, n));
                            }
                        }
                        Op::Get(k, e) => {
                            if let Some(v) = c.get(&key(&format!("q{k}"), e)) {
                                prop_assert_eq!(last.get(&k).copied(), Some((e, v.len() as u32)));
                            } else if last.get(&k).is_some_and(|&(le, _)| le != e) {
                                // a stale lookup purges the entry
                                last.remove(&k);
                            }
                        }
                    }
                    prop_assert!(c.used_bytes() <= c.budget());
                }
            }
        }
    }
}
