// SPDX-License-Identifier: Apache-2.0

//! Logical plans, their stage decomposition and operator folding.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::filter::Filter;
use crate::join::JoinKind;
use crate::storage::Snapshot;

use super::PlannerError;

/// Scan of one index, restricted by a filter and by the join clauses
/// hanging below it. Clauses are conjunctive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanNode {
    pub index: String,
    #[serde(default)]
    pub filter: Filter,
    /// Output column name for inner-join rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub joins: Vec<JoinClause>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinClause {
    One(JoinNode),
    /// Disjunction of semi-joins.
    AnyOf(Vec<JoinNode>),
}

impl JoinClause {
    pub fn edges(&self) -> &[JoinNode] {
        match self {
            JoinClause::One(j) => std::slice::from_ref(j),
            JoinClause::AnyOf(js) => js,
        }
    }
}

/// Equality join `parent[parent_key] = child[child_key]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinNode {
    pub kind: JoinKind,
    pub parent_key: String,
    pub child_key: String,
    pub child: ScanNode,
}

impl ScanNode {
    pub fn new(index: &str) -> Self {
        Self { index: index.to_string(), filter: Filter::all(), binding: None, joins: Vec::new() }
    }

    pub fn filter(mut self, filter: Filter) -> Self {
        self.filter = filter;
        self
    }

    pub fn bind(mut self, name: &str) -> Self {
        self.binding = Some(name.to_string());
        self
    }

    pub fn semi(mut self, parent_key: &str, child_key: &str, child: ScanNode) -> Self {
        self.joins.push(JoinClause::One(JoinNode::semi(parent_key, child_key, child)));
        self
    }

    pub fn inner(mut self, parent_key: &str, child_key: &str, child: ScanNode) -> Self {
        self.joins.push(JoinClause::One(JoinNode {
            kind: JoinKind::Inner,
            parent_key: parent_key.to_string(),
            child_key: child_key.to_string(),
            child,
        }));
        self
    }

    pub fn any_of(mut self, alternatives: Vec<JoinNode>) -> Self {
        self.joins.push(JoinClause::AnyOf(alternatives));
        self
    }

    /// Canonical text of the subtree. Bindings are ignored, clause order
    /// and disjunct order are normalized.
    pub fn canonical(&self) -> String {
        let mut clauses: Vec<String> = self
            .joins
            .iter()
            .map(|c| match c {
                JoinClause::One(j) => edge_canonical(&self.index, &self.filter, j),
                JoinClause::AnyOf(js) => {
                    let mut alts: Vec<String> = js.iter().map(|j| edge_canonical(&self.index, &self.filter, j)).collect();
                    alts.sort();
                    alts.dedup();
                    format!("or({})", alts.join("|"))
                }
            })
            .collect();
        clauses.sort();
        format!("{}[{}]{{{}}}", self.index, self.filter.canonical(), clauses.join(";"))
    }

    /// Every index referenced in the subtree.
    pub fn indices(&self, out: &mut BTreeSet<String>) {
        out.insert(self.index.clone());
        for c in &self.joins {
            for j in c.edges() {
                j.child.indices(out);
            }
        }
    }
}

impl JoinNode {
    pub fn semi(parent_key: &str, child_key: &str, child: ScanNode) -> Self {
        Self { kind: JoinKind::Semi, parent_key: parent_key.to_string(), child_key: child_key.to_string(), child }
    }
}

fn kind_tag(kind: JoinKind) -> &'static str {
    match kind {
        JoinKind::Semi => "semi",
        JoinKind::Inner => "inner",
    }
}

/// Canonical text of one join edge: the parent scan with its own filter
/// only, the key pair and the full child subtree.
fn edge_canonical(parent_index: &str, parent_filter: &Filter, j: &JoinNode) -> String {
    format!(
        "{}({}[{}].{}={}:{})",
        kind_tag(j.kind),
        parent_index,
        parent_filter.canonical(),
        j.parent_key,
        j.child_key,
        j.child.canonical()
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalPlan {
    pub root: ScanNode,
}

impl LogicalPlan {
    pub fn new(root: ScanNode) -> Self {
        Self { root }
    }

    pub fn canonical(&self) -> String {
        self.root.canonical()
    }

    /// Checks indices exist, disjunctions are nonempty semi-joins and
    /// bindings are unique.
    pub fn validate(&self, snapshot: &Snapshot) -> Result<(), PlannerError> {
        let mut seen = BTreeSet::new();
        validate_node(&self.root, snapshot, &mut seen)
    }
}

fn validate_node(node: &ScanNode, snapshot: &Snapshot, seen: &mut BTreeSet<String>) -> Result<(), PlannerError> {
    snapshot.index(&node.index)?;
    if let Some(b) = &node.binding {
        if !seen.insert(b.clone()) {
            return Err(PlannerError::Malformed(format!("binding `{b}` used twice")));
        }
    }
    for c in &node.joins {
        if let JoinClause::AnyOf(js) = c {
            if js.is_empty() {
                return Err(PlannerError::Malformed(format!("empty disjunction under `{}`", node.index)));
            }
            if js.iter().any(|j| j.kind == JoinKind::Inner) {
                return Err(PlannerError::Malformed("inner joins cannot appear inside a disjunction".into()));
            }
        }
        for j in c.edges() {
            if j.parent_key.is_empty() || j.child_key.is_empty() {
                return Err(PlannerError::Malformed("join keys must be named".into()));
            }
            validate_node(&j.child, snapshot, seen)?;
        }
    }
    Ok(())
}

/// Flattened scan node.
#[derive(Debug, Clone)]
pub struct FlatScan {
    pub plan: usize,
    pub index: String,
    pub filter: Filter,
    pub binding: Option<String>,
    /// Each clause lists the edges of a conjunct (several = disjunction).
    pub clauses: Vec<Vec<usize>>,
    pub canonical: String,
    /// The original subtree rooted here.
    pub node: ScanNode,
}

/// Flattened join edge.
#[derive(Debug, Clone)]
pub struct FlatEdge {
    pub kind: JoinKind,
    pub parent: usize,
    pub child: usize,
    pub parent_key: String,
    pub child_key: String,
    pub canonical: String,
    pub stage: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    /// Computes one join edge; also resolves the edge's child node.
    Edge(usize),
    /// Resolves a plan root that is not a single join edge.
    Combine(usize),
}

/// Unit of execution ending at a materialization point.
#[derive(Debug, Clone)]
pub struct Stage {
    pub id: usize,
    pub kind: StageKind,
    pub deps: BTreeSet<usize>,
    pub canonical: String,
    pub indices: BTreeSet<String>,
    pub label: String,
}

/// Stages of one or more plans. Stage ids start at 1.
#[derive(Debug, Clone)]
pub struct StageGraph {
    pub scans: Vec<FlatScan>,
    pub edges: Vec<FlatEdge>,
    pub stages: Vec<Stage>,
    /// Root scan of each plan.
    pub roots: Vec<usize>,
    /// Stage whose output is the resolved root set of each plan.
    pub root_stages: Vec<usize>,
}

impl StageGraph {
    pub fn stage(&self, id: usize) -> &Stage {
        &self.stages[id - 1]
    }

    /// Ids of stages that are not depended upon.
    pub fn sinks(&self) -> Vec<usize> {
        let used: BTreeSet<usize> = self.stages.iter().flat_map(|s| s.deps.iter().copied()).collect();
        self.stages.iter().map(|s| s.id).filter(|id| !used.contains(id)).collect()
    }

    /// Stages of every edge in the clauses of a scan.
    pub fn clause_stages(&self, scan: usize) -> BTreeSet<usize> {
        self.scans[scan].clauses.iter().flatten().map(|&e| self.edges[e].stage).collect()
    }
}

struct Flattener {
    scans: Vec<FlatScan>,
    edges: Vec<FlatEdge>,
    /// (height, preorder) per edge
    order: Vec<(usize, usize)>,
    preorder: usize,
}

impl Flattener {
    fn scan(&mut self, plan: usize, node: &ScanNode) -> (usize, usize) {
        let id = self.scans.len();
        self.scans.push(FlatScan {
            plan,
            index: node.index.clone(),
            filter: node.filter.clone(),
            binding: node.binding.clone(),
            clauses: Vec::new(),
            canonical: node.canonical(),
            node: node.clone(),
        });
        let mut height = 0;
        let mut clauses = Vec::new();
        for c in &node.joins {
            let mut edges = Vec::new();
            for j in c.edges() {
                let e = self.edges.len();
                self.edges.push(FlatEdge {
                    kind: j.kind,
                    parent: id,
                    child: usize::MAX,
                    parent_key: j.parent_key.clone(),
                    child_key: j.child_key.clone(),
                    canonical: edge_canonical(&node.index, &node.filter, j),
                    stage: 0,
                });
                self.order.push((0, self.preorder));
                self.preorder += 1;
                let (child, child_height) = self.scan(plan, &j.child);
                self.edges[e].child = child;
                self.order[e].0 = child_height + 1;
                height = height.max(child_height + 1);
                edges.push(e);
            }
            clauses.push(edges);
        }
        self.scans[id].clauses = clauses;
        (id, height)
    }
}

/// Cuts plans into stages: one per join edge plus a combine stage for each
/// root that is not a single join. Ids are assigned by edge height, deepest
/// first, ties in preorder; combine stages come last.
pub fn build_stages(plans: &[LogicalPlan]) -> StageGraph {
    let mut f = Flattener { scans: Vec::new(), edges: Vec::new(), order: Vec::new(), preorder: 0 };
    let mut roots = Vec::new();
    for (i, p) in plans.iter().enumerate() {
        roots.push(f.scan(i, &p.root).0);
    }
    let mut ordered: Vec<usize> = (0..f.edges.len()).collect();
    ordered.sort_by_key(|&e| f.order[e]);
    for (pos, &e) in ordered.iter().enumerate() {
        f.edges[e].stage = pos + 1;
    }
    let mut stages = Vec::new();
    for &e in &ordered {
        let edge = &f.edges[e];
        let deps = f.scans[edge.child].clauses.iter().flatten().map(|&c| f.edges[c].stage).collect();
        let mut indices = BTreeSet::new();
        indices.insert(f.scans[edge.parent].index.clone());
        collect_indices(&f.scans, &f.edges, edge.child, &mut indices);
        let parent = &f.scans[edge.parent];
        let child = &f.scans[edge.child];
        stages.push(Stage {
            id: edge.stage,
            kind: StageKind::Edge(e),
            deps,
            canonical: edge.canonical.clone(),
            indices,
            label: format!(
                "{} {} {} on {}.{} = {}.{}",
                parent.index,
                if edge.kind == JoinKind::Semi { "⋉" } else { "⋈" },
                child.index,
                parent.index,
                edge.parent_key,
                child.index,
                edge.child_key
            ),
        });
    }
    let mut root_stages = Vec::new();
    for &r in &roots {
        let root = &f.scans[r];
        if root.clauses.len() == 1 && root.clauses[0].len() == 1 {
            root_stages.push(f.edges[root.clauses[0][0]].stage);
            continue;
        }
        let id = stages.len() + 1;
        let mut indices = BTreeSet::new();
        collect_indices(&f.scans, &f.edges, r, &mut indices);
        stages.push(Stage {
            id,
            kind: StageKind::Combine(r),
            deps: root.clauses.iter().flatten().map(|&c| f.edges[c].stage).collect(),
            canonical: format!("root:{}", root.canonical),
            indices,
            label: if root.clauses.is_empty() {
                format!("scan {}", root.index)
            } else {
                format!("combine {}", root.index)
            },
        });
        root_stages.push(id);
    }
    StageGraph { scans: f.scans, edges: f.edges, stages, roots, root_stages }
}

fn collect_indices(scans: &[FlatScan], edges: &[FlatEdge], scan: usize, out: &mut BTreeSet<String>) {
    out.insert(scans[scan].index.clone());
    for &e in scans[scan].clauses.iter().flatten() {
        collect_indices(scans, edges, edges[e].child, out);
    }
}

/// One group of stages folded into a shared operator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldGroup {
    pub representative: usize,
    pub stages: Vec<usize>,
    pub canonical: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FoldReport {
    pub groups: Vec<FoldGroup>,
}

impl FoldReport {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Whether stages `a` and `b` were merged.
    pub fn merged(&self, a: usize, b: usize) -> bool {
        self.groups.iter().any(|g| g.stages.contains(&a) && g.stages.contains(&b))
    }
}

/// A stage graph with duplicate stages mapped onto one representative.
#[derive(Debug, Clone)]
pub struct FoldedPlan {
    pub graph: StageGraph,
    /// `rep[id - 1]` is the stage that computes stage `id`.
    pub rep: Vec<usize>,
    pub report: FoldReport,
}

impl FoldedPlan {
    pub fn representative(&self, id: usize) -> usize {
        self.rep[id - 1]
    }

    /// Representatives in id order; these are the stages that execute.
    pub fn executed_stages(&self) -> Vec<usize> {
        (1..=self.graph.stages.len()).filter(|&id| self.representative(id) == id).collect()
    }

    /// Dependencies of a stage after folding.
    pub fn deps(&self, id: usize) -> BTreeSet<usize> {
        self.graph.stage(id).deps.iter().map(|&d| self.representative(d)).collect()
    }

    /// Identity mapping: nothing shared.
    pub fn unfolded(graph: StageGraph) -> Self {
        let rep = (1..=graph.stages.len()).collect();
        Self { graph, rep, report: FoldReport::default() }
    }
}

/// Merges stages with equal semantic definitions. Every plan in the batch
/// reads the same snapshot, so equal canonical text implies equal epochs.
pub fn fold_plan(plans: &[LogicalPlan]) -> FoldedPlan {
    let graph = build_stages(plans);
    let mut by_key: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for s in &graph.stages {
        by_key.entry(&s.canonical).or_default().push(s.id);
    }
    let mut rep: Vec<usize> = (1..=graph.stages.len()).collect();
    let mut groups = Vec::new();
    for (canonical, ids) in by_key {
        let first = ids[0];
        for &id in &ids {
            rep[id - 1] = first;
        }
        if ids.len() > 1 {
            groups.push(FoldGroup { representative: first, stages: ids, canonical: canonical.to_string() });
        }
    }
    groups.sort_by_key(|g| g.representative);
    FoldedPlan { graph, rep, report: FoldReport { groups } }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{Bound, Clause};

    /// Posts flagged by a filter, phones of their authors, and the CDRs where
    /// those phones call or are called.
    pub(crate) fn investigation_plan() -> LogicalPlan {
        let suspicious = || {
            ScanNode::new("phones").semi("owner", "author", ScanNode::new("posts").filter(Filter::term("topic", "crime")))
        };
        LogicalPlan::new(
            ScanNode::new("cdr").any_of(vec![JoinNode::semi("caller", "number", suspicious()), JoinNode::semi("callee", "number", suspicious())]),
        )
    }

    #[test]
    fn investigation_has_five_stages() {
        let g = build_stages(&[investigation_plan()]);
        assert_eq!(g.stages.len(), 5);
        assert!(g.stage(1).deps.is_empty() && g.stage(2).deps.is_empty());
        let mut upstream = g.stage(3).deps.clone();
        upstream.extend(g.stage(4).deps.iter().copied());
        assert_eq!(upstream, BTreeSet::from([1, 2]));
        assert_eq!(g.stage(5).deps, BTreeSet::from([3, 4]));
        assert_eq!(g.root_stages, vec![5]);
    }

    #[test]
    fn investigation_folds_one_pair() {
        let f = fold_plan(&[investigation_plan()]);
        assert!(f.report.merged(1, 2));
        assert!(!f.report.merged(3, 4));
        assert_eq!(f.report.groups.len(), 1);
        assert_eq!(f.deps(3), BTreeSet::from([1]));
        assert_eq!(f.deps(4), BTreeSet::from([1]));
        assert_eq!(f.executed_stages(), vec![1, 3, 4, 5]);
    }

    #[test]
    fn single_scan_is_one_stage() {
        let g = build_stages(&[LogicalPlan::new(ScanNode::new("a"))]);
        assert_eq!(g.stages.len(), 1);
        assert!(matches!(g.stages[0].kind, StageKind::Combine(_)));
        assert!(fold_plan(&[LogicalPlan::new(ScanNode::new("a"))]).report.is_empty());
    }

    #[test]
    fn chain_forms_a_path() {
        let plan = LogicalPlan::new(
            ScanNode::new("a").semi("x", "x", ScanNode::new("b").semi("y", "y", ScanNode::new("c").semi("z", "z", ScanNode::new("d")))),
        );
        let g = build_stages(&[plan]);
        assert_eq!(g.stages.len(), 3);
        assert!(g.stage(1).deps.is_empty());
        assert_eq!(g.stage(2).deps, BTreeSet::from([1]));
        assert_eq!(g.stage(3).deps, BTreeSet::from([2]));
    }

    #[test]
    fn identical_plans_share_everything() {
        let f = fold_plan(&[investigation_plan(), investigation_plan()]);
        let one = build_stages(&[investigation_plan()]).stages.len();
        assert_eq!(f.graph.stages.len(), 2 * one);
        // one plan alone still shares its duplicated A⋉B edge
        assert_eq!(f.executed_stages().len(), fold_plan(&[investigation_plan()]).executed_stages().len());
    }

    #[test]
    fn canonical_ignores_clause_and_filter_order() {
        let f1 = Filter::term("a", 1).and(Clause::range("t", Bound::Inclusive(0.0), Bound::Unbounded));
        let f2 = Filter::new(vec![Clause::range("t", Bound::Inclusive(0.0), Bound::Unbounded), Clause::term("a", 1)]);
        let p = ScanNode::new("p").filter(f1).semi("k", "k", ScanNode::new("c")).semi("j", "j", ScanNode::new("d"));
        let q = ScanNode::new("p").filter(f2).semi("j", "j", ScanNode::new("d")).semi("k", "k", ScanNode::new("c")).bind("x");
        assert_eq!(p.canonical(), q.canonical());
    }
}
