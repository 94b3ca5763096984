// SPDX-License-Identifier: Apache-2.0

//! Global document ids and compressed document sets.

use std::fmt;

use roaring::RoaringTreemap;
use serde::{Deserialize, Serialize};

/// Cluster-wide document address: shard, segment, insertion ordinal.
///
/// Ordering is lexicographic on `(shard, segment, ordinal)`, which matches
/// the physical order of the log-structured storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GlobalDocId {
    pub shard: u16,
    pub segment: u16,
    pub ordinal: u32,
}

impl GlobalDocId {
    pub const fn new(shard: u16, segment: u16, ordinal: u32) -> Self {
        Self { shard, segment, ordinal }
    }

    /// Order-preserving packing into a `u64`.
    pub const fn to_u64(self) -> u64 {
        ((self.shard as u64) << 48) | ((self.segment as u64) << 32) | self.ordinal as u64
    }

    pub const fn from_u64(v: u64) -> Self {
        Self {
            shard: (v >> 48) as u16,
            segment: (v >> 32) as u16,
            ordinal: v as u32,
        }
    }
}

impl fmt::Display for GlobalDocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.shard, self.segment, self.ordinal)
    }
}

/// A set of [`GlobalDocId`]s backed by a roaring bitmap. Iteration is in
/// ascending id order.
#[derive(Clone, Default, PartialEq)]
pub struct DocSet {
    bits: RoaringTreemap,
}

impl DocSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: GlobalDocId) -> bool {
        self.bits.insert(id.to_u64())
    }

    pub fn contains(&self, id: GlobalDocId) -> bool {
        self.bits.contains(id.to_u64())
    }

    pub fn len(&self) -> u64 {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = GlobalDocId> + '_ {
        self.bits.iter().map(GlobalDocId::from_u64)
    }

    pub fn to_vec(&self) -> Vec<GlobalDocId> {
        self.iter().collect()
    }

    pub fn union_with(&mut self, other: &DocSet) {
        self.bits |= &other.bits;
    }

    pub fn intersect_with(&mut self, other: &DocSet) {
        self.bits &= &other.bits;
    }

    pub fn difference_with(&mut self, other: &DocSet) {
        self.bits -= &other.bits;
    }

    pub fn is_subset(&self, other: &DocSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    /// Serialized size of the compressed representation in bytes.
    pub fn size_bytes(&self) -> usize {
        self.bits.serialized_size()
    }
}

impl FromIterator<GlobalDocId> for DocSet {
    fn from_iter<I: IntoIterator<Item = GlobalDocId>>(iter: I) -> Self {
        let mut ids: Vec<u64> = iter.into_iter().map(GlobalDocId::to_u64).collect();
        ids.sort_unstable();
        ids.dedup();
        Self { bits: RoaringTreemap::from_sorted_iter(ids).expect("sorted input") }
    }
}

impl Extend<GlobalDocId> for DocSet {
    fn extend<I: IntoIterator<Item = GlobalDocId>>(&mut self, iter: I) {
        for id in iter {
            self.insert(id);
        }
    }
}

/// Serializes as the ascending id list.
impl Serialize for DocSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl fmt::Debug for DocSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn packing_preserves_order() {
        let a = GlobalDocId::new(0, 5, u32::MAX);
        let b = GlobalDocId::new(1, 0, 0);
        assert!(a < b);
        assert!(a.to_u64() < b.to_u64());
        assert_eq!(GlobalDocId::from_u64(a.to_u64()), a);
    }

    #[test]
    fn size_accounting_grows_with_content() {
        let small: DocSet = (0..10).map(|i| GlobalDocId::new(0, 0, i)).collect();
        let big: DocSet = (0..10_000).map(|i| GlobalDocId::new(0, 0, i * 7)).collect();
        assert!(small.size_bytes() < big.size_bytes());
    }

    proptest! {
        #[test]
        fn iteration_sorted_and_deduplicated(raw in proptest::collection::vec((0u16..4, 0u16..4, 0u32..64), 0..200)) {
            let ids: Vec<GlobalDocId> = raw.iter().map(|&(s, g, o)| GlobalDocId::new(s, g, o)).collect();
            let set: DocSet = ids.iter().copied().collect();
            let mut expect = ids.clone();
            expect.sort();
            expect.dedup();
            prop_assert_eq!(set.to_vec(), expect);
        }
    }
}
