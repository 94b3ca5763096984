// SPDX-License-Identifier: Apache-2.0

//! A small graph-pattern language over document indices.
//!
//! ```text
//! SELECT a.id, e.amount FROM "ldbc-finbench"
//! MATCH (a:Account WHERE "isBlocked:false")->(e:AccountTransferAccount)->(b:Account)
//! ```
//!
//! Text goes through [`parse_query`] to a [`Query`], then [`lower_to_plan`]
//! turns it into either a join plan or a path query against a [`Catalog`],
//! and [`QueryEngine`] runs it.

mod ast;
mod catalog;
mod filter;
mod lexer;
mod lower;
mod parser;
mod run;
pub mod workload;

pub use ast::{CmpOp, CountCondition, Dir, Elem, FValue, FilterAst, FilterClause, GroupPat, NodePat, Query, RangeEnd, SelectItem};
pub use catalog::{Catalog, EdgeDef, EntityDef};
pub use filter::{classify, parse_filter};
pub use lower::{lower_filter, lower_to_plan, Lowered, Params, PathsQuery, PlanQuery};
pub use parser::parse_query;
pub use run::{QueryEngine, QueryResult};

use crate::pathquery::PathError;
use crate::planner::PlannerError;
use crate::storage::StorageError;

/// A construct the language parses but the engine does not evaluate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Unsupported {
    #[error("cyclic pattern: `{var}` is reached twice")]
    Cycle { var: String },
    #[error("aggregate degree condition on `{var}`")]
    DegreeCondition { var: String },
    #[error("label disjunction `{labels}`")]
    LabelDisjunction { labels: String },
    #[error("cross-node reference `{reference}` in a filter")]
    CrossNodeReference { reference: String },
    #[error("function `{name}` in SELECT")]
    Function { name: String },
}

impl Unsupported {
    pub fn construct(&self) -> &'static str {
        match self {
            Unsupported::Cycle { .. } => "cycle",
            Unsupported::DegreeCondition { .. } => "degree_condition",
            Unsupported::LabelDisjunction { .. } => "label_disjunction",
            Unsupported::CrossNodeReference { .. } => "cross_node_reference",
            Unsupported::Function { .. } => "function",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("{line}:{col}: {message}")]
    Syntax { message: String, line: usize, col: usize },
    #[error("{line}:{col}: malformed filter: {message}")]
    MalformedFilter { message: String, line: usize, col: usize },
    /// Repetition bounds must satisfy `1 <= min <= max`.
    #[error("{line}:{col}: invalid quantifier {{{min},{max}}}")]
    InvalidQuantifier { min: i64, max: i64, line: usize, col: usize },
    #[error("variable `{var}` is not bound by the pattern")]
    UnboundVariable { var: String },
    #[error("unknown catalog `{name}`")]
    UnknownCatalog { name: String },
    #[error("unknown label `{label}`")]
    UnknownLabel { label: String },
    #[error("parameter `{name}` has no value")]
    UnboundParameter { name: String },
    #[error("unsupported: {0}")]
    Unsupported(Unsupported),
    #[error("{0}")]
    Semantic(String),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

impl QueryError {
    pub fn syntax(message: impl Into<String>, line: usize, col: usize) -> Self {
        QueryError::Syntax { message: message.into(), line, col }
    }

    /// Stable machine-readable error class.
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::Syntax { .. } => "syntax",
            QueryError::MalformedFilter { .. } => "malformed_filter",
            QueryError::InvalidQuantifier { .. } => "invalid_quantifier",
            QueryError::UnboundVariable { .. } => "unbound_variable",
            QueryError::UnknownCatalog { .. } => "unknown_catalog",
            QueryError::UnknownLabel { .. } => "unknown_label",
            QueryError::UnboundParameter { .. } => "unbound_parameter",
            QueryError::Unsupported(_) => "unsupported",
            QueryError::Semantic(_) => "semantic",
            QueryError::Planner(_) => "planner",
            QueryError::Path(_) => "path",
            QueryError::Storage(_) => "storage",
        }
    }

    /// 1-based line and column, for errors tied to a text location.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            QueryError::Syntax { line, col, .. } | QueryError::MalformedFilter { line, col, .. } | QueryError::InvalidQuantifier { line, col, .. } => Some((*line, *col)),
            _ => None,
        }
    }
}
