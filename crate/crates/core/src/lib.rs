// SPDX-License-Identifier: Apache-2.0

//! An embeddable document-store query engine over a simulated cluster.
//!
//! Documents live in sharded, log-structured indices ([`storage`]). Joins
//! between indices are field equalities executed as semi-joins (bitsets of
//! parent ids) or inner joins (id pairs) under one of four distribution
//! strategies ([`join`]), moving columnar batches between simulated nodes
//! ([`exchange`]). The [`planner`] cuts a join tree into stages, folds
//! duplicate work and picks strategies either upfront or per stage;
//! semi-join results are memoized in a semantic [`cache`]. [`pathquery`]
//! enumerates shortest paths through semi-join decomposition, and
//! [`querylang`] parses a small path-pattern language into plans.

pub mod bulk;
pub mod cache;
pub mod docset;
pub mod exchange;
pub mod filter;
pub mod join;
pub mod par;
pub mod pathquery;
pub mod planner;
pub mod querylang;
pub mod storage;
pub mod value;

pub use docset::{DocSet, GlobalDocId};
pub use filter::{Bound, Clause, Filter};
pub use storage::{Snapshot, Store};
pub use value::{Document, FieldValue, Key, Scalar};
