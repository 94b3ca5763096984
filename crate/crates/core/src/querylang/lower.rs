// SPDX-License-Identifier: Apache-2.0

//! Pattern to plan translation.
//!
//! Node patterns become scans. An arrow always joins an entity with an
//! edge document; which key field of the edge applies is decided by the
//! entity's label, and by the arrow direction when both endpoints carry
//! that label. Juxtaposed node patterns denote the same node, except that a
//! bare `(var)` naming an earlier node starts a new branch from it.
//!
//! Without a path variable the pattern must be a tree. Edges on the paths
//! between projected variables become inner joins, rooted at the first
//! projected variable; everything else filters by semi-joins, and a
//! quantified group becomes one alternative per repetition count. With a
//! path variable or `ALL SHORTEST` the pattern must be a chain and lowers
//! to a path query.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::filter::{Bound, Clause, Filter};
use crate::pathquery::{HopGroup, PathPos, PathQuerySpec, PathSemantics, Step};
use crate::planner::{JoinClause, JoinNode, LogicalPlan, ScanNode};
use crate::value::Scalar;

use super::ast::{Dir, Elem, FValue, FilterAst, FilterClause, NodePat, Query, RangeEnd, SelectItem};
use super::catalog::Catalog;
use super::{QueryError, Unsupported};

/// Named parameter values, parsed as integer, then float, then text.
pub type Params = BTreeMap<String, String>;

fn param_scalar(raw: &str) -> Scalar {
    if let Ok(v) = raw.parse::<i64>() {
        Scalar::Int(v)
    } else if let Ok(v) = raw.parse::<f64>() {
        Scalar::Float(v)
    } else {
        Scalar::Text(raw.to_string())
    }
}

fn value(v: &FValue, params: &Params) -> Result<Scalar, QueryError> {
    match v {
        FValue::Int(x) => Ok(Scalar::Int(*x)),
        FValue::Float(x) => Ok(Scalar::Float(*x)),
        FValue::Text(s) => Ok(Scalar::Text(s.clone())),
        FValue::Param(p) => params.get(p).map(|raw| param_scalar(raw)).ok_or_else(|| QueryError::UnboundParameter { name: p.clone() }),
        FValue::Ref { var, field } => Err(QueryError::Unsupported(Unsupported::CrossNodeReference { reference: format!("{var}.{field}") })),
    }
}

fn bound(end: &RangeEnd, params: &Params) -> Result<Bound, QueryError> {
    match end {
        RangeEnd::Star => Ok(Bound::Unbounded),
        RangeEnd::Value { value: v, inclusive } => {
            let x = value(v, params)?.as_f64().ok_or_else(|| QueryError::Semantic(format!("range endpoint `{v}` is not numeric")))?;
            Ok(if *inclusive { Bound::Inclusive(x) } else { Bound::Exclusive(x) })
        }
    }
}

/// Binds parameters and converts to an executable filter.
pub fn lower_filter(ast: &FilterAst, params: &Params) -> Result<Filter, QueryError> {
    let mut f = Filter::all();
    for c in &ast.clauses {
        f = f.and(match c {
            FilterClause::Term { field, value: v } => Clause::term(field, value(v, params)?),
            FilterClause::Range { field, lo, hi } => Clause::range(field, bound(lo, params)?, bound(hi, params)?),
        });
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Entity,
    Edge,
}

#[derive(Debug, Clone)]
struct PNode {
    var: Option<String>,
    label: Option<String>,
    filter: Filter,
}

/// A resolved hop between two pattern nodes.
#[derive(Debug, Clone)]
struct Hop {
    a: usize,
    b: usize,
    a_key: String,
    b_key: String,
}

#[derive(Debug, Clone)]
struct GroupTmpl {
    /// Group positions; the first and last carry the boundary label.
    nodes: Vec<PNode>,
    /// `keys[i]`: key on `nodes[i]` and on `nodes[i + 1]`.
    keys: Vec<(String, String)>,
    min: usize,
    max: usize,
}

#[derive(Debug, Clone)]
enum Link {
    Hop(Hop),
    Group { entry: usize, exit: usize, tmpl: GroupTmpl },
}

impl Link {
    fn ends(&self) -> (usize, usize) {
        match self {
            Link::Hop(h) => (h.a, h.b),
            Link::Group { entry, exit, .. } => (*entry, *exit),
        }
    }
}

struct Builder<'c> {
    catalog: &'c Catalog,
    params: &'c Params,
    nodes: Vec<PNode>,
    links: Vec<Link>,
    vars: HashMap<String, usize>,
    group_vars: BTreeSet<String>,
    /// Link index -> whether it branches off an anchor instead of the
    /// previous element.
    anchored: bool,
}

impl<'c> Builder<'c> {
    fn kind(&self, label: &str) -> Result<Kind, QueryError> {
        if self.catalog.entities.contains_key(label) {
            Ok(Kind::Entity)
        } else if self.catalog.edges.contains_key(label) {
            Ok(Kind::Edge)
        } else {
            Err(QueryError::UnknownLabel { label: label.to_string() })
        }
    }

    fn pnode(&self, n: &NodePat) -> Result<PNode, QueryError> {
        if n.labels.len() > 1 {
            return Err(QueryError::Unsupported(Unsupported::LabelDisjunction { labels: n.labels.join("|") }));
        }
        let label = n.labels.first().cloned();
        if let Some(l) = &label {
            self.kind(l)?;
        }
        let filter = match &n.filter {
            Some(f) => lower_filter(f, self.params)?,
            None => Filter::all(),
        };
        Ok(PNode { var: n.var.clone(), label, filter })
    }

    fn add(&mut self, p: PNode) -> Result<usize, QueryError> {
        let id = self.nodes.len();
        if let Some(v) = &p.var {
            if self.vars.insert(v.clone(), id).is_some() {
                return Err(QueryError::Unsupported(Unsupported::Cycle { var: v.clone() }));
            }
        }
        self.nodes.push(p);
        Ok(id)
    }

    /// Merges `p` into existing node `into`.
    fn unify(&mut self, into: usize, p: PNode) -> Result<(), QueryError> {
        let cur = &self.nodes[into];
        if let (Some(a), Some(b)) = (&cur.label, &p.label) {
            if a != b {
                return Err(QueryError::Semantic(format!("adjacent node patterns `{a}` and `{b}` denote one node but disagree on its label")));
            }
        }
        if let Some(v) = &p.var {
            match &cur.var {
                Some(w) if w == v => {}
                Some(w) => return Err(QueryError::Semantic(format!("adjacent node patterns bind one node to both `{w}` and `{v}`"))),
                None => {
                    if self.vars.contains_key(v) {
                        return Err(QueryError::Unsupported(Unsupported::Cycle { var: v.clone() }));
                    }
                    self.vars.insert(v.clone(), into);
                }
            }
        }
        let cur = &mut self.nodes[into];
        cur.var = cur.var.take().or(p.var);
        cur.label = cur.label.take().or(p.label);
        cur.filter = cur.filter.clone().and_filter(&p.filter);
        Ok(())
    }

    /// Key fields for an arrow between `x` and `y`; `x_first` is the
    /// textual order, `dir` the arrow.
    fn keys(&self, x: &PNode, y: &PNode, dir: Dir) -> Result<(String, String), QueryError> {
        let lx = x.label.as_deref().ok_or_else(|| QueryError::Semantic("every node pattern needs a label".into()))?;
        let ly = y.label.as_deref().ok_or_else(|| QueryError::Semantic("every node pattern needs a label".into()))?;
        // x -> y when dir is Right
        let (entity, edge, entity_is_x) = match (self.kind(lx)?, self.kind(ly)?) {
            (Kind::Entity, Kind::Edge) => (lx, ly, true),
            (Kind::Edge, Kind::Entity) => (ly, lx, false),
            _ => return Err(QueryError::Semantic(format!("`{lx}` and `{ly}` cannot be adjacent: one must be an edge label"))),
        };
        let e = &self.catalog.edges[edge];
        let ent = &self.catalog.entities[entity];
        let as_source = e.source_label == entity;
        let as_target = e.target_label == entity;
        let points_from_entity = (dir == Dir::Right) == entity_is_x;
        let field = match (as_source, as_target) {
            (true, true) if points_from_entity => &e.source_field,
            (true, true) => &e.target_field,
            (true, false) => &e.source_field,
            (false, true) => &e.target_field,
            (false, false) => return Err(QueryError::Semantic(format!("`{edge}` does not connect to `{entity}`"))),
        };
        Ok(if entity_is_x { (ent.key.clone(), field.clone()) } else { (field.clone(), ent.key.clone()) })
    }

    fn hop(&mut self, a: usize, b: usize, dir: Dir) -> Result<(), QueryError> {
        let (a_key, b_key) = self.keys(&self.nodes[a], &self.nodes[b], dir)?;
        self.links.push(Link::Hop(Hop { a, b, a_key, b_key }));
        Ok(())
    }

    fn template(&mut self, elems: &[Elem], min: usize, max: usize) -> Result<GroupTmpl, QueryError> {
        let mut nodes = Vec::new();
        let mut dirs = Vec::new();
        for e in elems {
            match e {
                Elem::Node(n) => {
                    let p = self.pnode(n)?;
                    if p.label.is_none() {
                        return Err(QueryError::Semantic("node patterns inside a group need a label".into()));
                    }
                    if let Some(v) = &p.var {
                        if self.vars.contains_key(v) || !self.group_vars.insert(v.clone()) {
                            return Err(QueryError::Unsupported(Unsupported::Cycle { var: v.clone() }));
                        }
                    }
                    nodes.push(p);
                }
                Elem::Arrow(d) => dirs.push(*d),
                Elem::Group(_) => return Err(QueryError::Semantic("nested quantified groups are not supported".into())),
            }
        }
        if nodes.len() != dirs.len() + 1 || nodes.len() < 2 {
            return Err(QueryError::Semantic("a group must be a chain of node patterns joined by arrows".into()));
        }
        if nodes.first().unwrap().label != nodes.last().unwrap().label {
            return Err(QueryError::Semantic("a quantified group must start and end on the same label".into()));
        }
        let mut keys = Vec::new();
        for (i, d) in dirs.iter().enumerate() {
            keys.push(self.keys(&nodes[i], &nodes[i + 1], *d)?);
        }
        Ok(GroupTmpl { nodes, keys, min, max })
    }

    fn build(&mut self, pattern: &[Elem]) -> Result<(), QueryError> {
        let mut cur: Option<usize> = None;
        let mut arrow: Option<Dir> = None;
        // group waiting for the node that follows it
        let mut open_group: Option<GroupTmpl> = None;
        for e in pattern {
            match e {
                Elem::Arrow(d) => arrow = Some(*d),
                Elem::Node(n) => {
                    if let Some(d) = arrow.take() {
                        if let Some(v) = &n.var {
                            if self.vars.contains_key(v) {
                                return Err(QueryError::Unsupported(Unsupported::Cycle { var: v.clone() }));
                            }
                        }
                        let p = self.pnode(n)?;
                        let id = self.add(p)?;
                        self.hop(cur.expect("arrows follow nodes"), id, d)?;
                        cur = Some(id);
                    } else if let Some(tmpl) = open_group.take() {
                        let mut p = self.pnode(n)?;
                        let last = tmpl.nodes.last().unwrap();
                        if p.label.is_some() && p.label != last.label {
                            return Err(QueryError::Semantic("the node after a group must carry the group's label".into()));
                        }
                        p.label = p.label.or_else(|| last.label.clone());
                        p.filter = p.filter.and_filter(&last.filter);
                        let id = self.add(p)?;
                        self.links.push(Link::Group { entry: cur.unwrap(), exit: id, tmpl });
                        cur = Some(id);
                    } else {
                        match cur {
                            None => {
                                let p = self.pnode(n)?;
                                cur = Some(self.add(p)?);
                            }
                            Some(c) if n.is_bare_ref() && self.vars.contains_key(n.var.as_ref().unwrap()) => {
                                let target = self.vars[n.var.as_ref().unwrap()];
                                if target != c {
                                    self.anchored = true;
                                }
                                cur = Some(target);
                            }
                            Some(c) => {
                                let p = self.pnode(n)?;
                                self.unify(c, p)?;
                            }
                        }
                    }
                }
                Elem::Group(g) => {
                    if open_group.is_some() {
                        return Err(QueryError::Semantic("two adjacent quantified groups".into()));
                    }
                    let tmpl = self.template(&g.elems, g.min, g.max)?;
                    let first = tmpl.nodes[0].clone();
                    let entry = match cur {
                        None => self.add(PNode { var: None, ..first })?,
                        Some(c) => {
                            self.unify(c, PNode { var: None, ..first })?;
                            c
                        }
                    };
                    cur = Some(entry);
                    open_group = Some(tmpl);
                }
            }
        }
        if let Some(tmpl) = open_group {
            let last = tmpl.nodes.last().unwrap();
            let id = self.add(PNode { var: None, label: last.label.clone(), filter: last.filter.clone() })?;
            self.links.push(Link::Group { entry: cur.unwrap(), exit: id, tmpl });
        }
        for n in &self.nodes {
            if n.label.is_none() {
                return Err(QueryError::Semantic("every node pattern needs a label".into()));
            }
        }
        Ok(())
    }

    fn index(&self, n: &PNode) -> String {
        self.catalog.index_of(n.label.as_deref().unwrap()).unwrap().to_string()
    }

    fn scan(&self, n: &PNode) -> ScanNode {
        let s = ScanNode::new(&self.index(n)).filter(n.filter.clone());
        match &n.var {
            Some(v) => s.bind(v),
            None => s,
        }
    }
}

/// A lowered statement.
#[derive(Debug, Clone, Serialize)]
pub enum Lowered {
    Plan(PlanQuery),
    Paths(PathsQuery),
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanQuery {
    pub plan: LogicalPlan,
    /// `(binding, field)` per output column.
    pub select: Vec<(String, Option<String>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathsQuery {
    pub spec: PathQuerySpec,
    pub path_var: String,
}

pub fn lower_to_plan(q: &Query, catalog: &Catalog, params: &Params) -> Result<Lowered, QueryError> {
    if q.from != catalog.name {
        return Err(QueryError::UnknownCatalog { name: q.from.clone() });
    }
    for s in &q.select {
        if let SelectItem::Call { name, .. } = s {
            return Err(QueryError::Unsupported(Unsupported::Function { name: name.clone() }));
        }
    }
    if let Some(c) = &q.condition {
        return Err(QueryError::Unsupported(Unsupported::DegreeCondition { var: c.var.clone() }));
    }
    let mut b = Builder {
        catalog,
        params,
        nodes: Vec::new(),
        links: Vec::new(),
        vars: HashMap::new(),
        group_vars: BTreeSet::new(),
        anchored: false,
    };
    b.build(&q.pattern)?;
    if q.all_shortest || q.path_var.is_some() {
        lower_paths(&b, q)
    } else {
        lower_tree(&b, q)
    }
}

fn lower_paths(b: &Builder<'_>, q: &Query) -> Result<Lowered, QueryError> {
    let Some(path_var) = q.path_var.clone() else {
        return Err(QueryError::Semantic("ALL SHORTEST needs a path variable".into()));
    };
    for s in &q.select {
        if !matches!(s, SelectItem::Ref { var, field: None } if *var == path_var) {
            return Err(QueryError::Semantic(format!("a path query projects only `{path_var}`")));
        }
    }
    if b.anchored {
        return Err(QueryError::Semantic("a path pattern must be a single chain".into()));
    }
    let mut expect = 0;
    let mut prefix = Vec::new();
    let mut suffix = Vec::new();
    let mut group = None;
    let mut exit_filter = Filter::all();
    for link in &b.links {
        let (from, to) = link.ends();
        if from != expect {
            return Err(QueryError::Semantic("a path pattern must be a single chain".into()));
        }
        match link {
            Link::Hop(h) => {
                let n = &b.nodes[to];
                let step = Step::new(&h.a_key, &b.index(n), &h.b_key, n.filter.clone());
                if group.is_none() {
                    prefix.push(step);
                } else {
                    suffix.push(step);
                }
            }
            Link::Group { tmpl, .. } => {
                if group.is_some() {
                    return Err(QueryError::Semantic("a path pattern may contain one quantified group".into()));
                }
                let steps = (1..tmpl.nodes.len())
                    .map(|i| {
                        let n = &tmpl.nodes[i];
                        let (ok, ik) = &tmpl.keys[i - 1];
                        Step::new(ok, &b.index(n), ik, n.filter.clone())
                    })
                    .collect();
                group = Some(HopGroup { entry_filter: tmpl.nodes[0].filter.clone(), steps, min: tmpl.min, max: tmpl.max });
                exit_filter = b.nodes[to].filter.clone();
            }
        }
        expect = to;
    }
    let start = &b.nodes[0];
    let semantics = if q.all_shortest { PathSemantics::AllShortest } else { PathSemantics::AllUpTo };
    let spec = PathQuerySpec {
        start: PathPos::new(&b.index(start), start.filter.clone()),
        prefix,
        group,
        exit_filter,
        suffix,
        semantics,
    };
    Ok(Lowered::Paths(PathsQuery { spec, path_var }))
}

fn lower_tree(b: &Builder<'_>, q: &Query) -> Result<Lowered, QueryError> {
    let mut select = Vec::new();
    let mut selected = Vec::new();
    for s in &q.select {
        let SelectItem::Ref { var, field } = s else { unreachable!("calls rejected above") };
        if b.group_vars.contains(var) {
            return Err(QueryError::Semantic(format!("`{var}` is inside a quantified group and cannot be projected")));
        }
        let id = b.vars[var];
        if !selected.contains(&id) {
            selected.push(id);
        }
        select.push((var.clone(), field.clone()));
    }
    let root = selected[0];
    // adjacency: node -> (link, neighbour)
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); b.nodes.len()];
    for (i, l) in b.links.iter().enumerate() {
        let (x, y) = l.ends();
        adj[x].push((i, y));
        adj[y].push((i, x));
    }
    // parent pointers from the root
    let mut parent: Vec<Option<usize>> = vec![None; b.nodes.len()];
    let mut seen = vec![false; b.nodes.len()];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(n) = stack.pop() {
        for &(_, m) in &adj[n] {
            if !seen[m] {
                seen[m] = true;
                parent[m] = Some(n);
                stack.push(m);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(QueryError::Semantic("the pattern is not connected".into()));
    }
    let mut steiner = vec![false; b.nodes.len()];
    for &s in &selected {
        let mut n = Some(s);
        while let Some(x) = n {
            if steiner[x] {
                break;
            }
            steiner[x] = true;
            n = parent[x];
        }
    }
    let node = tree_node(b, &adj, &steiner, root, None)?;
    Ok(Lowered::Plan(PlanQuery { plan: LogicalPlan::new(node), select }))
}

fn tree_node(b: &Builder<'_>, adj: &[Vec<(usize, usize)>], steiner: &[bool], n: usize, from: Option<usize>) -> Result<ScanNode, QueryError> {
    let mut scan = b.scan(&b.nodes[n]);
    for &(li, m) in &adj[n] {
        if Some(li) == from {
            continue;
        }
        let inner = steiner[n] && steiner[m];
        match &b.links[li] {
            Link::Hop(h) => {
                let (pk, ck) = if h.a == n { (&h.a_key, &h.b_key) } else { (&h.b_key, &h.a_key) };
                let child = tree_node(b, adj, steiner, m, Some(li))?;
                scan = if inner { scan.inner(pk, ck, child) } else { scan.semi(pk, ck, child) };
            }
            Link::Group { entry, tmpl, .. } => {
                if inner {
                    return Err(QueryError::Semantic("a quantified group cannot sit between projected variables".into()));
                }
                // one copy of the far side per repetition count; its
                // variables are never projected, so the copies stay unbound
                let far = unbind(tree_node(b, adj, steiner, m, Some(li))?);
                let forward = *entry == n;
                let alts = (tmpl.min..=tmpl.max).map(|r| unroll(b, tmpl, forward, r, far.clone())).collect();
                scan = scan.any_of(alts);
            }
        }
    }
    Ok(scan)
}

fn unbind(mut n: ScanNode) -> ScanNode {
    n.binding = None;
    for c in &mut n.joins {
        let edges = match c {
            JoinClause::One(j) => std::slice::from_mut(j),
            JoinClause::AnyOf(js) => js.as_mut_slice(),
        };
        for j in edges {
            j.child = unbind(std::mem::replace(&mut j.child, ScanNode::new("")));
        }
    }
    n
}

/// One repetition count of a group as a semi-join chain ending in `far`.
fn unroll(b: &Builder<'_>, tmpl: &GroupTmpl, forward: bool, reps: usize, far: ScanNode) -> JoinNode {
    let mut nodes = tmpl.nodes.clone();
    let mut keys = tmpl.keys.clone();
    if !forward {
        nodes.reverse();
        keys.reverse();
        for k in &mut keys {
            std::mem::swap(&mut k.0, &mut k.1);
        }
    }
    let k = nodes.len() - 1;
    let boundary = nodes[k].filter.clone().and_filter(&nodes[0].filter);
    // positions after the starting node, in walk order
    let mut walk: Vec<(PNode, (String, String))> = Vec::new();
    for rep in 0..reps {
        for i in 1..=k {
            let mut p = nodes[i].clone();
            p.var = None;
            if i == k && rep + 1 < reps {
                p.filter = boundary.clone();
            }
            walk.push((p, keys[i - 1].clone()));
        }
    }
    let mut child = far;
    for j in (0..walk.len()).rev() {
        let (_, (pk, ck)) = &walk[j];
        if j == 0 {
            return JoinNode::semi(pk, ck, child);
        }
        let parent = b.scan(&walk[j - 1].0);
        child = parent.semi(pk, ck, child);
    }
    unreachable!("a group has at least one hop")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::querylang::parse_query;

    fn params() -> Params {
        [("START", "10"), ("END", "90"), ("PERSON_ID", "7"), ("ACCOUNT_ID", "3")].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn lower(text: &str) -> Result<Lowered, QueryError> {
        lower_to_plan(&parse_query(text)?, &Catalog::finbench_mini(), &params())
    }

    fn kinds(n: &ScanNode, out: &mut Vec<crate::join::JoinKind>) {
        for c in &n.joins {
            for e in c.edges() {
                out.push(e.kind);
                kinds(&e.child, out);
            }
        }
    }

    #[test]
    fn single_projection_uses_only_semi_joins() {
        let q = "SELECT l.loanAmount FROM \"ldbc-finbench\" MATCH (l:Loan)<-(:PersonApplyLoan)<-(p2:Person) \
                 ((:Person)<-(g:PersonGuaranteePerson WHERE \"createTime:{START TO END}\")<-(:Person)){1,10} (p1:Person WHERE \"id:PERSON_ID\")";
        let Lowered::Plan(p) = lower(q).unwrap() else { panic!() };
        let mut k = vec![];
        kinds(&p.plan.root, &mut k);
        assert!(k.iter().all(|k| *k == crate::join::JoinKind::Semi));
        // l <- PersonApplyLoan: loan id against the edge's loan field
        let e = &p.plan.root.joins[0].edges()[0];
        assert_eq!((e.parent_key.as_str(), e.child_key.as_str()), ("id", "loanId"));
        let p2 = &e.child.joins[0].edges()[0].child;
        assert!(matches!(&p2.joins[0], JoinClause::AnyOf(alts) if alts.len() == 10));
    }

    #[test]
    fn multi_projection_uses_inner_joins() {
        let q = "SELECT src.id, dst.id, edge1.amount, edge2.amount FROM \"ldbc-finbench\" MATCH (src:Account)\
                 ->(edge1:AccountTransferAccount WHERE \"amount:{0 TO *} AND createTime:{START TO END}\")->(mid:Account WHERE \"id:PERSON_ID\")\
                 ->(edge2:AccountTransferAccount WHERE \"amount:{0 TO *}\")->(dst:Account)";
        let Lowered::Plan(p) = lower(q).unwrap() else { panic!() };
        let mut k = vec![];
        kinds(&p.plan.root, &mut k);
        assert_eq!(k.len(), 4);
        assert!(k.iter().all(|k| *k == crate::join::JoinKind::Inner));
        let e = &p.plan.root.joins[0].edges()[0];
        assert_eq!((e.parent_key.as_str(), e.child_key.as_str()), ("id", "fromId"));
        assert_eq!(p.plan.root.binding.as_deref(), Some("src"));
    }

    #[test]
    fn unsupported_constructs() {
        let cyc = "SELECT a.id FROM \"ldbc-finbench\" MATCH (a:Account)->(:AccountTransferAccount)->(b:Account)->(:AccountTransferAccount)->(a)";
        assert!(matches!(lower(cyc), Err(QueryError::Unsupported(Unsupported::Cycle { .. }))));
        let disj = "SELECT a.id FROM \"ldbc-finbench\" MATCH (a:Account)->(:AccountTransferAccount|LoanDepositAccount)->(b:Account)";
        assert!(matches!(lower(disj), Err(QueryError::Unsupported(Unsupported::LabelDisjunction { .. }))));
        let xref = "SELECT a.id FROM \"ldbc-finbench\" MATCH (a:Account)->(:AccountTransferAccount)->(b:Account WHERE \"id:a.id\")";
        assert!(matches!(lower(xref), Err(QueryError::Unsupported(Unsupported::CrossNodeReference { .. }))));
        let deg = "SELECT a.id FROM \"ldbc-finbench\" MATCH (a:Account)->(e:AccountTransferAccount)->(b:Account) WHERE COUNT(e) > 3";
        assert!(matches!(lower(deg), Err(QueryError::Unsupported(Unsupported::DegreeCondition { .. }))));
        let func = "SELECT JACCARD(a, b) FROM \"ldbc-finbench\" MATCH (a:Account)->(e:AccountTransferAccount)->(b:Account)";
        assert!(matches!(lower(func), Err(QueryError::Unsupported(Unsupported::Function { .. }))));
    }

    #[test]
    fn label_and_catalog_errors() {
        assert!(matches!(lower("SELECT a FROM \"ldbc-finbench\" MATCH (a:Planet)"), Err(QueryError::UnknownLabel { .. })));
        assert!(matches!(lower("SELECT a FROM \"other\" MATCH (a:Account)"), Err(QueryError::UnknownCatalog { .. })));
        let unbound = "SELECT a FROM \"ldbc-finbench\" MATCH (a:Account WHERE \"id:NOPE\")";
        assert!(matches!(lower(unbound), Err(QueryError::UnboundParameter { .. })));
    }

    #[test]
    fn shortest_lowers_to_path_spec() {
        let q = "SELECT trace FROM \"ldbc-finbench\" MATCH trace = ALL SHORTEST (src:Account WHERE \"id:ACCOUNT_ID\") \
                 ((:Account)->(:AccountTransferAccount WHERE \"createTime:{START TO END}\")->(:Account)){1,10} (dst:Account WHERE \"id:ACCOUNT_ID\")";
        let Lowered::Paths(p) = lower(q).unwrap() else { panic!() };
        assert_eq!(p.spec.semantics, PathSemantics::AllShortest);
        let g = p.spec.group.as_ref().unwrap();
        assert_eq!((g.min, g.max, g.steps.len()), (1, 10, 2));
        assert_eq!((g.steps[0].out_key.as_str(), g.steps[0].in_key.as_str()), ("id", "fromId"));
        assert_eq!((g.steps[1].out_key.as_str(), g.steps[1].in_key.as_str()), ("toId", "id"));
        assert_eq!(p.spec.instantiate(2).unwrap().len(), 4);
    }

    #[test]
    fn anchored_branch() {
        let q = "SELECT edge1.amount, edge3.amount FROM \"ldbc-finbench\" MATCH (up:Account)->(edge3:AccountTransferAccount)->(mid:Account) \
                 (mid)<-(edge1:LoanDepositAccount)";
        let Lowered::Plan(p) = lower(q).unwrap() else { panic!() };
        // root edge1 -> mid (inner) -> edge3 (inner) -> up (semi)
        assert_eq!(p.plan.root.binding.as_deref(), Some("edge1"));
        let mid = &p.plan.root.joins[0].edges()[0];
        assert_eq!((mid.parent_key.as_str(), mid.child_key.as_str()), ("accountId", "id"));
        let e3 = &mid.child.joins[0].edges()[0];
        assert_eq!(e3.kind, crate::join::JoinKind::Inner);
        assert_eq!(e3.child.joins[0].edges()[0].kind, crate::join::JoinKind::Semi);
    }
}
