// SPDX-License-Identifier: Apache-2.0

//! Syntax tree and its canonical text form.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Query {
    pub select: Vec<SelectItem>,
    /// Catalog (dataset namespace) name.
    pub from: String,
    pub path_var: Option<String>,
    pub all_shortest: bool,
    pub pattern: Vec<Elem>,
    /// Trailing `WHERE COUNT(var) op n`; parsed so it can be rejected by name.
    pub condition: Option<CountCondition>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SelectItem {
    /// `var` or `var.field`.
    Ref { var: String, field: Option<String> },
    /// `NAME(args)`.
    Call { name: String, args: Vec<SelectItem> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Elem {
    Node(NodePat),
    Arrow(Dir),
    Group(GroupPat),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dir {
    /// `->`
    Right,
    /// `<-`
    Left,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodePat {
    pub var: Option<String>,
    /// More than one label is a disjunction.
    pub labels: Vec<String>,
    pub filter: Option<FilterAst>,
}

impl NodePat {
    /// `(var)` with nothing else: a reference to an earlier binding.
    pub fn is_bare_ref(&self) -> bool {
        self.var.is_some() && self.labels.is_empty() && self.filter.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupPat {
    pub elems: Vec<Elem>,
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountCondition {
    pub var: String,
    pub op: CmpOp,
    pub value: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmpOp {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
}

/// Conjunction of term and range clauses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterAst {
    pub clauses: Vec<FilterClause>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FilterClause {
    Term { field: String, value: FValue },
    Range { field: String, lo: RangeEnd, hi: RangeEnd },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RangeEnd {
    Star,
    Value { value: FValue, inclusive: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FValue {
    Int(i64),
    Float(f64),
    Text(String),
    /// Upper-case placeholder bound at lowering.
    Param(String),
    /// `var.field` of another node.
    Ref { var: String, field: String },
}

impl fmt::Display for FValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FValue::Int(v) => write!(f, "{v}"),
            FValue::Float(v) => write!(f, "{v:?}"),
            FValue::Text(s) | FValue::Param(s) => f.write_str(s),
            FValue::Ref { var, field } => write!(f, "{var}.{field}"),
        }
    }
}

impl fmt::Display for FilterAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            match c {
                FilterClause::Term { field, value } => write!(f, "{field}:{value}")?,
                FilterClause::Range { field, lo, hi } => {
                    let (open, lo) = match lo {
                        RangeEnd::Star => ('{', "*".to_string()),
                        RangeEnd::Value { value, inclusive } => (if *inclusive { '[' } else { '{' }, value.to_string()),
                    };
                    let (close, hi) = match hi {
                        RangeEnd::Star => ('}', "*".to_string()),
                        RangeEnd::Value { value, inclusive } => (if *inclusive { ']' } else { '}' }, value.to_string()),
                    };
                    write!(f, "{field}:{open}{lo} TO {hi}{close}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Ref { var, field: None } => f.write_str(var),
            SelectItem::Ref { var, field: Some(x) } => write!(f, "{var}.{x}"),
            SelectItem::Call { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn render_elems(f: &mut fmt::Formatter<'_>, elems: &[Elem]) -> fmt::Result {
    for (i, e) in elems.iter().enumerate() {
        let after_arrow = i > 0 && matches!(elems[i - 1], Elem::Arrow(_));
        if i > 0 && !after_arrow && !matches!(e, Elem::Arrow(_)) {
            f.write_str(" ")?;
        }
        match e {
            Elem::Arrow(Dir::Right) => f.write_str("->")?,
            Elem::Arrow(Dir::Left) => f.write_str("<-")?,
            Elem::Node(n) => write!(f, "{n}")?,
            Elem::Group(g) => {
                f.write_str("(")?;
                render_elems(f, &g.elems)?;
                write!(f, "){{{},{}}}", g.min, g.max)?;
            }
        }
    }
    Ok(())
}

impl fmt::Display for NodePat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        if let Some(v) = &self.var {
            f.write_str(v)?;
        }
        if !self.labels.is_empty() {
            write!(f, ":{}", self.labels.join("|"))?;
        }
        if let Some(flt) = &self.filter {
            write!(f, " WHERE \"{flt}\"")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        for (i, s) in self.select.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, " FROM \"{}\" MATCH ", self.from)?;
        if let Some(p) = &self.path_var {
            write!(f, "{p} = ")?;
        }
        if self.all_shortest {
            f.write_str("ALL SHORTEST ")?;
        }
        render_elems(f, &self.pattern)?;
        if let Some(c) = &self.condition {
            let op = match c.op {
                CmpOp::Gt => ">",
                CmpOp::Ge => ">=",
                CmpOp::Lt => "<",
                CmpOp::Le => "<=",
                CmpOp::Eq => "=",
            };
            write!(f, " WHERE COUNT({}) {op} {}", c.var, c.value)?;
        }
        Ok(())
    }
}
