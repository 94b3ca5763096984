// SPDX-License-Identifier: Apache-2.0

//! Generated data before it is loaded: bulk sections plus a content hash.

use docjoin_core::bulk::{write_section, Section, SectionHeader};
use docjoin_core::storage::StorageError;
use docjoin_core::{Document, Store};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default)]
pub struct Sections(pub Vec<Section>);

impl Sections {
    pub fn push(&mut self, index: &str, routing: &str, shards: usize, docs: Vec<Document>) {
        self.0.push(Section { header: SectionHeader { index: index.to_string(), routing: routing.to_string(), shards }, docs });
    }

    pub fn get(&self, index: &str) -> Option<&[Document]> {
        self.0.iter().find(|s| s.header.index == index).map(|s| s.docs.as_slice())
    }

    pub fn doc_count(&self) -> usize {
        self.0.iter().map(|s| s.docs.len()).sum()
    }

    /// Creates, fills and seals every index.
    pub fn load(&self, store: &Store) -> Result<(), StorageError> {
        for s in &self.0 {
            let h = &s.header;
            store.create_index(&h.index, h.shards, &h.routing)?;
            store.add_documents(&h.index, s.docs.iter().cloned())?;
            store.seal_all(&h.index)?;
        }
        Ok(())
    }

    pub fn write_bulk(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        for s in &self.0 {
            write_section(&mut w, &s.header, &s.docs)?;
        }
        Ok(())
    }

    /// SHA-256 of the bulk rendering, hex.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        self.write_bulk(&mut buf).expect("writing to memory");
        let digest = Sha256::digest(&buf);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
