// SPDX-License-Identifier: Apache-2.0

//! Line-oriented bulk load format.
//!
//! ```text
//! #index Account routing=id shards=4
//! {"id": 1, "isBlocked": false, "tags": ["a", "b"]}
//! {"id": 2, "isBlocked": true}
//! #index AccountTransferAccount routing=fromId shards=4
//! {"fromId": 1, "toId": 2, "amount": 10.5, "createTime": 120}
//! ```
//!
//! A header line starts a section; each following nonblank line is one
//! document as a flat JSON object. Values are numbers, strings, booleans
//! (stored as the text `true`/`false`) or arrays of those.

use std::io::{BufRead, Write};

use serde_json::{Map, Value};

use crate::storage::{Store, StorageError};
use crate::value::{Document, FieldValue, Scalar};

#[derive(Debug, thiserror::Error)]
pub enum BulkError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionHeader {
    pub index: String,
    pub routing: String,
    pub shards: usize,
}

impl SectionHeader {
    pub fn render(&self) -> String {
        format!("#index {} routing={} shards={}", self.index, self.routing, self.shards)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub header: SectionHeader,
    pub docs: Vec<Document>,
}

fn parse_header(text: &str, line: usize) -> Result<SectionHeader, BulkError> {
    let bad = |m: &str| BulkError::Format { line, message: m.to_string() };
    let mut parts = text.split_whitespace();
    if parts.next() != Some("#index") {
        return Err(bad("expected `#index <name> routing=<field> shards=<n>`"));
    }
    let index = parts.next().ok_or_else(|| bad("missing index name"))?.to_string();
    let (mut routing, mut shards) = (None, None);
    for p in parts {
        match p.split_once('=') {
            Some(("routing", f)) if !f.is_empty() => routing = Some(f.to_string()),
            Some(("shards", n)) => shards = Some(n.parse::<usize>().map_err(|_| bad("shards must be a positive integer"))?),
            _ => return Err(bad(&format!("unknown header attribute `{p}`"))),
        }
    }
    Ok(SectionHeader { index, routing: routing.ok_or_else(|| bad("missing routing="))?, shards: shards.unwrap_or(1) })
}

fn scalar(v: &Value) -> Option<Scalar> {
    match v {
        Value::Number(n) => n.as_i64().map(Scalar::Int).or_else(|| n.as_f64().map(Scalar::Float)),
        Value::String(s) => Some(Scalar::Text(s.clone())),
        Value::Bool(b) => Some(Scalar::Text(b.to_string())),
        _ => None,
    }
}

fn document(obj: Map<String, Value>, line: usize) -> Result<Document, BulkError> {
    let mut doc = Document::new();
    for (k, v) in obj {
        let bad = || BulkError::Format { line, message: format!("field `{k}` must be a scalar or a list of scalars") };
        let fv = match &v {
            Value::Array(xs) => FieldValue::Many(xs.iter().map(scalar).collect::<Option<Vec<_>>>().ok_or_else(bad)?),
            Value::Null => continue,
            other => FieldValue::One(scalar(other).ok_or_else(bad)?),
        };
        doc.try_insert(&k, fv).map_err(|e| BulkError::Format { line, message: e.to_string() })?;
    }
    Ok(doc)
}

pub fn parse_bulk(reader: impl BufRead) -> Result<Vec<Section>, BulkError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if text.starts_with('#') {
            sections.push(Section { header: parse_header(text, line_no)?, docs: Vec::new() });
            continue;
        }
        let section = sections.last_mut().ok_or_else(|| BulkError::Format { line: line_no, message: "document before any `#index` header".into() })?;
        let value: Value = serde_json::from_str(text).map_err(|e| BulkError::Format { line: line_no, message: e.to_string() })?;
        let Value::Object(obj) = value else {
            return Err(BulkError::Format { line: line_no, message: "a document must be a JSON object".into() });
        };
        section.docs.push(document(obj, line_no)?);
    }
    Ok(sections)
}

/// Creates missing indices, appends the documents and seals every shard.
/// Returns `(index, documents loaded)` per section.
pub fn load_bulk(store: &Store, reader: impl BufRead) -> Result<Vec<(String, usize)>, BulkError> {
    let mut out = Vec::new();
    for s in parse_bulk(reader)? {
        let h = &s.header;
        match store.create_index(&h.index, h.shards, &h.routing) {
            Ok(_) | Err(StorageError::DuplicateIndex(_)) => {}
            Err(e) => return Err(e.into()),
        }
        let n = s.docs.len();
        store.add_documents(&h.index, s.docs)?;
        store.seal_all(&h.index)?;
        out.push((h.index.clone(), n));
    }
    Ok(out)
}

pub fn write_section<'d>(mut w: impl Write, header: &SectionHeader, docs: impl IntoIterator<Item = &'d Document>) -> std::io::Result<()> {
    writeln!(w, "{}", header.render())?;
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        writeln!(w)?;
    }
    Ok(())
}
