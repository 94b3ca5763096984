// SPDX-License-Identifier: Apache-2.0

//! Reference evaluators that share no execution code with the engine:
//! a nested-loop join, BFS and backtracking path enumeration, and a direct
//! pattern matcher over raw documents. They are slow on purpose.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use docjoin_core::pathquery::{PathQuerySpec, PathSchema, PathSemantics};
use docjoin_core::querylang::{Dir, Elem, FValue, FilterAst, FilterClause, NodePat, Query, RangeEnd, SelectItem};
use docjoin_core::querylang::{Catalog, Params};
use docjoin_core::{Clause, Document, FieldValue, Filter, GlobalDocId, Key, Scalar, Snapshot};
use serde_json::{json, Value};

use crate::graphs::Graph;

/// Every visible document of an index with its id.
pub fn index_docs(snapshot: &Snapshot, index: &str) -> Vec<(GlobalDocId, Document)> {
    let ids = snapshot.index(index).expect("index in snapshot").all_ids().to_vec();
    let docs = snapshot.materialize_docs(index, &ids, None).expect("materialize");
    ids.into_iter().zip(docs).collect()
}

fn keys(d: &Document, field: &str) -> Vec<Key> {
    d.get(field).map(|v| v.values().iter().map(Key::from).collect()).unwrap_or_default()
}

fn share_key(a: &Document, af: &str, b: &Document, bf: &str) -> bool {
    let ka = keys(a, af);
    !ka.is_empty() && keys(b, bf).iter().any(|k| ka.contains(k))
}

/// Clause-by-clause evaluation on one document.
pub fn filter_matches(d: &Document, f: &Filter) -> bool {
    f.clauses().iter().all(|c| match c {
        Clause::Term { field, value } => keys(d, field).contains(value),
        Clause::Range { field, .. } => {
            d.get(field).is_some_and(|v| v.values().iter().any(|s| s.as_f64().is_some_and(|x| c.range_admits(x))))
        }
    })
}

/// One side of a join for the nested loop: index, filter, key field.
pub type Side<'a> = (&'a str, &'a Filter, &'a str);

/// Inner-join rows by nested loop: every matching `(parent, child)` pair
/// with the child's `projection` values, sorted by ids.
pub fn nested_loop_rows(snapshot: &Snapshot, parent: Side<'_>, child: Side<'_>, projection: &[String]) -> Vec<(GlobalDocId, GlobalDocId, Vec<Option<FieldValue>>)> {
    let side = |s: Side<'_>| -> Vec<(GlobalDocId, Vec<Key>, Document)> {
        index_docs(snapshot, s.0).into_iter().filter(|(_, d)| filter_matches(d, s.1)).map(|(id, d)| (id, keys(&d, s.2), d)).collect()
    };
    let ps = side(parent);
    let cs = side(child);
    let mut out = Vec::new();
    for (pid, pk, _) in &ps {
        for (cid, ck, cd) in &cs {
            if pk.iter().any(|k| ck.contains(k)) {
                out.push((*pid, *cid, projection.iter().map(|f| cd.get(f).cloned()).collect()));
            }
        }
    }
    out.sort_by_key(|r| (r.0, r.1));
    out
}

pub fn nested_loop_semi(snapshot: &Snapshot, parent: Side<'_>, child: Side<'_>) -> BTreeSet<GlobalDocId> {
    nested_loop_rows(snapshot, parent, child, &[]).into_iter().map(|r| r.0).collect()
}

/// All shortest paths from `source` to any node in `targets` by BFS
/// distance labels, then backtracking along distance-decreasing edges.
/// Zero-length paths are excluded; the search tries lengths `1..=max_len`.
pub fn bfs_all_shortest(g: &Graph, source: usize, targets: &BTreeSet<usize>, max_len: usize) -> (Option<usize>, BTreeSet<Vec<usize>>) {
    // Exact-length frontiers: walks may revisit nodes, so a target equal to
    // the source is found on a cycle rather than at distance 0.
    let mut frontier: BTreeSet<usize> = [source].into();
    let mut layers = vec![frontier.clone()];
    let mut found = None;
    for len in 1..=max_len {
        frontier = frontier.iter().flat_map(|&u| g.adj[u].iter().copied()).collect();
        layers.push(frontier.clone());
        if frontier.iter().any(|v| targets.contains(v)) {
            found = Some(len);
            break;
        }
        if frontier.is_empty() {
            break;
        }
    }
    let Some(len) = found else { return (None, BTreeSet::new()) };
    let mut paths = BTreeSet::new();
    for &t in targets.iter().filter(|t| layers[len].contains(t)) {
        let mut stack = vec![vec![t]];
        while let Some(rev) = stack.pop() {
            let k = len + 1 - rev.len();
            if k == 0 {
                paths.insert(rev.iter().rev().copied().collect());
                continue;
            }
            let v = *rev.last().unwrap();
            for &u in &layers[k - 1] {
                if g.adj[u].contains(&v) {
                    let mut next = rev.clone();
                    next.push(u);
                    stack.push(next);
                }
            }
        }
    }
    (Some(len), paths)
}

/// BFS shortest distance, for checking the length alone.
pub fn bfs_distance(g: &Graph, source: usize, target: usize) -> Option<usize> {
    let mut dist = vec![usize::MAX; g.len()];
    let mut q = VecDeque::new();
    for &v in &g.adj[source] {
        if dist[v] == usize::MAX {
            dist[v] = 1;
            q.push_back(v);
        }
    }
    while let Some(u) = q.pop_front() {
        for &v in &g.adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    (dist[target] != usize::MAX).then_some(dist[target])
}

/// Every walk of `1..=max_len` hops from `source` into `targets`.
pub fn all_walks_up_to(g: &Graph, source: usize, targets: &BTreeSet<usize>, max_len: usize) -> BTreeSet<Vec<usize>> {
    // can[k][v]: a target is exactly k hops from v
    let mut can = vec![vec![false; g.len()]; max_len + 1];
    for &t in targets {
        can[0][t] = true;
    }
    for k in 1..=max_len {
        for u in 0..g.len() {
            can[k][u] = g.adj[u].iter().any(|&v| can[k - 1][v]);
        }
    }
    let mut out = BTreeSet::new();
    for len in 1..=max_len {
        if !can[len][source] {
            continue;
        }
        let mut stack = vec![vec![source]];
        while let Some(p) = stack.pop() {
            let left = len + 1 - p.len();
            if left == 0 {
                out.insert(p);
                continue;
            }
            for &v in &g.adj[*p.last().unwrap()] {
                if can[left - 1][v] {
                    let mut q = p.clone();
                    q.push(v);
                    stack.push(q);
                }
            }
        }
    }
    out
}

/// Every document sequence satisfying a schema, by backtracking with
/// exact-length pruning.
pub fn schema_paths(snapshot: &Snapshot, schema: &PathSchema) -> BTreeSet<Vec<GlobalDocId>> {
    let cands: Vec<Vec<(GlobalDocId, Document)>> = schema
        .positions
        .iter()
        .map(|p| index_docs(snapshot, &p.index).into_iter().filter(|(_, d)| filter_matches(d, &p.filter)).collect())
        .collect();
    let n = cands.len();
    // alive[i][j]: candidate j of position i reaches the end
    let mut alive: Vec<Vec<bool>> = cands.iter().map(|c| vec![false; c.len()]).collect();
    alive[n - 1].iter_mut().for_each(|a| *a = true);
    for i in (0..n - 1).rev() {
        let h = &schema.hops[i];
        for j in 0..cands[i].len() {
            alive[i][j] = cands[i + 1]
                .iter()
                .enumerate()
                .any(|(m, (_, d))| alive[i + 1][m] && share_key(&cands[i][j].1, &h.out_key, d, &h.in_key));
        }
    }
    let mut out = BTreeSet::new();
    let mut stack: Vec<Vec<usize>> = (0..cands[0].len()).filter(|&j| alive[0][j]).map(|j| vec![j]).collect();
    while let Some(p) = stack.pop() {
        let i = p.len() - 1;
        if i == n - 1 {
            out.insert(p.iter().enumerate().map(|(k, &j)| cands[k][j].0).collect());
            continue;
        }
        let h = &schema.hops[i];
        let cur = &cands[i][p[i]].1;
        for (m, (_, d)) in cands[i + 1].iter().enumerate() {
            if alive[i + 1][m] && share_key(cur, &h.out_key, d, &h.in_key) {
                let mut q = p.clone();
                q.push(m);
                stack.push(q);
            }
        }
    }
    out
}

/// Paths of a spec under its semantics, plus the first length found.
pub fn spec_paths(snapshot: &Snapshot, spec: &PathQuerySpec) -> (Option<usize>, BTreeSet<Vec<GlobalDocId>>) {
    let mut all = BTreeSet::new();
    let mut first = None;
    for reps in spec.repetitions() {
        let schema = spec.instantiate(reps).expect("valid spec");
        let found = schema_paths(snapshot, &schema);
        if !found.is_empty() {
            first.get_or_insert(schema.len());
            all.extend(found);
            if spec.semantics == PathSemantics::AllShortest {
                break;
            }
        }
    }
    (first, all)
}

// ---- pattern matcher ----

#[derive(Debug, Clone)]
struct ONode {
    var: Option<String>,
    label: String,
    clauses: Vec<FilterClause>,
}

#[derive(Debug, Clone)]
enum OLink {
    Hop { a: usize, b: usize, a_key: String, b_key: String },
    Group { entry: usize, exit: usize, nodes: Vec<ONode>, keys: Vec<(String, String)>, min: usize, max: usize },
}

impl OLink {
    fn ends(&self) -> (usize, usize) {
        match self {
            OLink::Hop { a, b, .. } => (*a, *b),
            OLink::Group { entry, exit, .. } => (*entry, *exit),
        }
    }
}

struct Matcher<'a> {
    catalog: &'a Catalog,
    params: &'a Params,
    data: &'a crate::dataset::Sections,
}

fn param_scalar(raw: &str) -> Scalar {
    raw.parse::<i64>().map(Scalar::Int).or_else(|_| raw.parse::<f64>().map(Scalar::Float)).unwrap_or_else(|_| Scalar::Text(raw.to_string()))
}

impl Matcher<'_> {
    fn resolve(&self, v: &FValue) -> Result<Scalar, String> {
        match v {
            FValue::Int(x) => Ok(Scalar::Int(*x)),
            FValue::Float(x) => Ok(Scalar::Float(*x)),
            FValue::Text(s) => Ok(Scalar::Text(s.clone())),
            FValue::Param(p) => self.params.get(p).map(|r| param_scalar(r)).ok_or(format!("unbound {p}")),
            FValue::Ref { .. } => Err("reference".into()),
        }
    }

    fn holds(&self, d: &Document, clauses: &[FilterClause]) -> Result<bool, String> {
        for c in clauses {
            let ok = match c {
                FilterClause::Term { field, value } => {
                    let want = self.resolve(value)?;
                    d.get(field).is_some_and(|v| {
                        v.values().iter().any(|s| match (s.as_f64(), want.as_f64()) {
                            (Some(a), Some(b)) => a == b,
                            _ => *s == want,
                        })
                    })
                }
                FilterClause::Range { field, lo, hi } => {
                    let lo = match lo {
                        RangeEnd::Star => None,
                        RangeEnd::Value { value, inclusive } => Some((self.resolve(value)?.as_f64().ok_or("text bound")?, *inclusive)),
                    };
                    let hi = match hi {
                        RangeEnd::Star => None,
                        RangeEnd::Value { value, inclusive } => Some((self.resolve(value)?.as_f64().ok_or("text bound")?, *inclusive)),
                    };
                    d.get(field).is_some_and(|v| {
                        v.values().iter().filter_map(Scalar::as_f64).any(|x| {
                            lo.is_none_or(|(l, inc)| if inc { x >= l } else { x > l })
                                && hi.is_none_or(|(h, inc)| if inc { x <= h } else { x < h })
                        })
                    })
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn docs(&self, label: &str) -> &[Document] {
        self.data.get(self.catalog.index_of(label).expect("known label")).unwrap_or(&[])
    }

    fn candidates(&self, n: &ONode) -> Result<Vec<usize>, String> {
        let mut out = Vec::new();
        for (i, d) in self.docs(&n.label).iter().enumerate() {
            if self.holds(d, &n.clauses)? {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Key fields when `x` (textually first) and `y` are joined by `dir`.
    fn hop_keys(&self, x: &str, y: &str, dir: Dir) -> Result<(String, String), String> {
        let (entity, edge, x_is_entity) = if self.catalog.entities.contains_key(x) { (x, y, true) } else { (y, x, false) };
        let e = self.catalog.edges.get(edge).ok_or(format!("{edge} is not an edge"))?;
        let key = self.catalog.entities.get(entity).ok_or(format!("{entity} is not an entity"))?.key.clone();
        // the arrow leaves the entity when it points away from it
        let leaves_entity = match dir {
            Dir::Right => x_is_entity,
            Dir::Left => !x_is_entity,
        };
        let field = if e.source_label == entity && e.target_label == entity {
            if leaves_entity { &e.source_field } else { &e.target_field }
        } else if e.source_label == entity {
            &e.source_field
        } else if e.target_label == entity {
            &e.target_field
        } else {
            return Err(format!("{edge} does not touch {entity}"));
        };
        Ok(if x_is_entity { (key, field.clone()) } else { (field.clone(), key) })
    }
}

fn onode(n: &NodePat) -> ONode {
    ONode { var: n.var.clone(), label: n.labels.first().cloned().unwrap_or_default(), clauses: n.filter.as_ref().map(|f: &FilterAst| f.clauses.clone()).unwrap_or_default() }
}

fn merge(into: &mut ONode, p: ONode) {
    if into.label.is_empty() {
        into.label = p.label;
    }
    if into.var.is_none() {
        into.var = p.var;
    }
    into.clauses.extend(p.clauses);
}

type Tuple = Vec<usize>;

/// Rows of a tree pattern by direct evaluation: one row per distinct
/// assignment of the nodes connecting the projected variables, projected
/// and sorted by their JSON text.
pub fn eval_pattern(q: &Query, catalog: &Catalog, params: &Params, data: &crate::dataset::Sections) -> Result<Vec<Vec<Value>>, String> {
    let m = Matcher { catalog, params, data };
    let mut nodes: Vec<ONode> = Vec::new();
    let mut links: Vec<OLink> = Vec::new();
    let mut cur: Option<usize> = None;
    let mut arrow = None;
    let mut pending: Option<(Vec<ONode>, Vec<Dir>, usize, usize)> = None;
    let var_of = |nodes: &[ONode], v: &str| nodes.iter().position(|n| n.var.as_deref() == Some(v));
    for e in &q.pattern {
        match e {
            Elem::Arrow(d) => arrow = Some(*d),
            Elem::Node(n) => {
                let p = onode(n);
                if let Some(d) = arrow.take() {
                    let from = cur.unwrap();
                    nodes.push(p);
                    let to = nodes.len() - 1;
                    let (a_key, b_key) = m.hop_keys(&nodes[from].label, &nodes[to].label, d)?;
                    links.push(OLink::Hop { a: from, b: to, a_key, b_key });
                    cur = Some(to);
                } else if let Some((gn, dirs, min, max)) = pending.take() {
                    let mut p = p;
                    let last = gn.last().unwrap();
                    if p.label.is_empty() {
                        p.label = last.label.clone();
                    }
                    p.clauses.extend(last.clauses.iter().cloned());
                    nodes.push(p);
                    let exit = nodes.len() - 1;
                    let mut keys = Vec::new();
                    for (i, d) in dirs.iter().enumerate() {
                        keys.push(m.hop_keys(&gn[i].label, &gn[i + 1].label, *d)?);
                    }
                    links.push(OLink::Group { entry: cur.unwrap(), exit, nodes: gn, keys, min, max });
                    cur = Some(exit);
                } else if let Some(v) = n.var.as_deref().filter(|_| n.labels.is_empty() && n.filter.is_none()).and_then(|v| var_of(&nodes, v)) {
                    cur = Some(v);
                } else if let Some(c) = cur {
                    merge(&mut nodes[c], p);
                } else {
                    nodes.push(p);
                    cur = Some(nodes.len() - 1);
                }
            }
            Elem::Group(g) => {
                let mut gn = Vec::new();
                let mut dirs = Vec::new();
                for ge in &g.elems {
                    match ge {
                        Elem::Node(n) => gn.push(onode(n)),
                        Elem::Arrow(d) => dirs.push(*d),
                        Elem::Group(_) => return Err("nested group".into()),
                    }
                }
                let first = ONode { var: None, ..gn[0].clone() };
                match cur {
                    Some(c) => merge(&mut nodes[c], first),
                    None => {
                        nodes.push(first);
                        cur = Some(nodes.len() - 1);
                    }
                }
                pending = Some((gn, dirs, g.min, g.max));
            }
        }
    }
    if let Some((gn, dirs, min, max)) = pending {
        let last = gn.last().unwrap().clone();
        nodes.push(ONode { var: None, ..last });
        let exit = nodes.len() - 1;
        let mut keys = Vec::new();
        for (i, d) in dirs.iter().enumerate() {
            keys.push(m.hop_keys(&gn[i].label, &gn[i + 1].label, *d)?);
        }
        links.push(OLink::Group { entry: cur.unwrap(), exit, nodes: gn, keys, min, max });
    }

    let cands: Vec<Vec<usize>> = nodes.iter().map(|n| m.candidates(n)).collect::<Result<_, _>>()?;
    // group links become explicit (entry doc, exit doc) relations
    let mut group_pairs: HashMap<usize, BTreeSet<(usize, usize)>> = HashMap::new();
    for (li, l) in links.iter().enumerate() {
        if let OLink::Group { entry, exit, nodes: gn, keys, min, max } = l {
            let k = gn.len() - 1;
            let mut pairs = BTreeSet::new();
            let exits: BTreeSet<usize> = cands[*exit].iter().copied().collect();
            for &start in &cands[*entry] {
                let mut frontier: BTreeSet<usize> = [start].into();
                for rep in 1..=*max {
                    for i in 1..=k {
                        let prev_docs = m.docs(&gn[i - 1].label);
                        let mut next = BTreeSet::new();
                        for (y, yd) in m.docs(&gn[i].label).iter().enumerate() {
                            if m.holds(yd, &gn[i].clauses)? && frontier.iter().any(|&x| share_key(&prev_docs[x], &keys[i - 1].0, yd, &keys[i - 1].1)) {
                                next.insert(y);
                            }
                        }
                        frontier = next;
                    }
                    if rep >= *min {
                        for &x in frontier.intersection(&exits) {
                            pairs.insert((start, x));
                        }
                    }
                    // continuing: the boundary position must also pass t_0
                    let mut keep = BTreeSet::new();
                    for &x in &frontier {
                        if m.holds(&m.docs(&gn[0].label)[x], &gn[0].clauses)? {
                            keep.insert(x);
                        }
                    }
                    frontier = keep;
                    if frontier.is_empty() {
                        break;
                    }
                }
            }
            group_pairs.insert(li, pairs);
        }
    }
    let related = |li: usize, from: usize, fd: usize, td: usize| -> bool {
        match &links[li] {
            OLink::Hop { a, a_key, b_key, .. } => {
                let (l, r) = links[li].ends();
                let (fk, tk) = if *a == from { (a_key, b_key) } else { (b_key, a_key) };
                let (fl, tl) = if *a == from { (&nodes[l].label, &nodes[r].label) } else { (&nodes[r].label, &nodes[l].label) };
                share_key(&m.docs(fl)[fd], fk, &m.docs(tl)[td], tk)
            }
            OLink::Group { entry, .. } => {
                let p = &group_pairs[&li];
                if *entry == from { p.contains(&(fd, td)) } else { p.contains(&(td, fd)) }
            }
        }
    };

    let mut selected = Vec::new();
    for s in &q.select {
        let SelectItem::Ref { var, .. } = s else { return Err("function".into()) };
        let id = var_of(&nodes, var).ok_or(format!("unbound {var}"))?;
        if !selected.contains(&id) {
            selected.push(id);
        }
    }
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes.len()];
    for (li, l) in links.iter().enumerate() {
        let (x, y) = l.ends();
        adj[x].push((li, y));
        adj[y].push((li, x));
    }
    let root = selected[0];
    // subtree of n (rooted at root) contains a selected node
    fn mark(n: usize, from: Option<usize>, adj: &[Vec<(usize, usize)>], sel: &[usize], steiner: &mut [bool]) -> bool {
        let mut any = sel.contains(&n);
        for &(li, c) in &adj[n] {
            if Some(li) != from && mark(c, Some(li), adj, sel, steiner) {
                any = true;
            }
        }
        steiner[n] = any;
        any
    }
    let mut steiner = vec![false; nodes.len()];
    mark(root, None, &adj, &selected, &mut steiner);

    // docs of n that satisfy everything below it
    fn sat(
        n: usize,
        from: Option<usize>,
        adj: &[Vec<(usize, usize)>],
        cands: &[Vec<usize>],
        related: &dyn Fn(usize, usize, usize, usize) -> bool,
    ) -> Vec<usize> {
        let subs: Vec<(usize, usize, Vec<usize>)> =
            adj[n].iter().filter(|(li, _)| Some(*li) != from).map(|&(li, c)| (li, c, sat(c, Some(li), adj, cands, related))).collect();
        cands[n].iter().copied().filter(|&d| subs.iter().all(|(li, _, ok)| ok.iter().any(|&cd| related(*li, n, d, cd)))).collect()
    }

    fn tuples(
        n: usize,
        from: Option<usize>,
        adj: &[Vec<(usize, usize)>],
        cands: &[Vec<usize>],
        steiner: &[bool],
        related: &dyn Fn(usize, usize, usize, usize) -> bool,
    ) -> Vec<BTreeMap<usize, usize>> {
        let mut side = Vec::new();
        let mut inner = Vec::new();
        for &(li, c) in &adj[n] {
            if Some(li) == from {
                continue;
            }
            if steiner[c] {
                inner.push((li, c, tuples(c, Some(li), adj, cands, steiner, related)));
            } else {
                side.push((li, sat(c, Some(li), adj, cands, related)));
            }
        }
        let mut out = Vec::new();
        for &d in &cands[n] {
            if !side.iter().all(|(li, ok)| ok.iter().any(|&cd| related(*li, n, d, cd))) {
                continue;
            }
            let mut acc: Vec<BTreeMap<usize, usize>> = vec![[(n, d)].into()];
            for (li, c, ts) in &inner {
                let mut next = Vec::new();
                for a in &acc {
                    for t in ts.iter().filter(|t| related(*li, n, d, t[c])) {
                        let mut m = a.clone();
                        m.extend(t.iter().map(|(k, v)| (*k, *v)));
                        next.push(m);
                    }
                }
                acc = next;
            }
            out.extend(acc);
        }
        out
    }

    let all: BTreeSet<Tuple> = tuples(root, None, &adj, &cands, &steiner, &related).into_iter().map(|t| t.into_values().collect()).collect();
    let steiner_ids: Vec<usize> = (0..nodes.len()).filter(|&i| steiner[i]).collect();
    let mut rows = Vec::new();
    for t in all {
        let mut row = Vec::new();
        for s in &q.select {
            let SelectItem::Ref { var, field } = s else { unreachable!() };
            let id = var_of(&nodes, var).unwrap();
            let doc = &m.docs(&nodes[id].label)[t[steiner_ids.iter().position(|&x| x == id).unwrap()]];
            let Some(f) = field else { return Err("bare variables have no document-level value here".into()) };
            row.push(field_json(doc.get(f)));
        }
        rows.push(row);
    }
    rows.sort_by_key(|r| serde_json::to_string(r).unwrap());
    Ok(rows)
}

fn field_json(v: Option<&FieldValue>) -> Value {
    let s = |s: &Scalar| match s {
        Scalar::Int(v) => json!(v),
        Scalar::Float(v) => json!(v),
        Scalar::Text(t) => json!(t),
    };
    match v {
        None => Value::Null,
        Some(FieldValue::One(x)) => s(x),
        Some(FieldValue::Many(xs)) => Value::Array(xs.iter().map(s).collect()),
    }
}

/// Rows in the order [`eval_pattern`] returns them.
pub fn sorted_rows(mut rows: Vec<Vec<Value>>) -> Vec<Vec<Value>> {
    rows.sort_by_key(|r| serde_json::to_string(r).unwrap());
    rows
}
