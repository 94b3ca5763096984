// SPDX-License-Identifier: Apache-2.0

//! Stage scheduler and executor.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use serde::Serialize;

use crate::cache::{CacheMode, SemanticCache, SemanticKey};
use crate::docset::{DocSet, GlobalDocId};
use crate::exchange::ClusterTopology;
use crate::join::{self, JoinInput, JoinKind, JoinOptions, JoinResult, JoinStats, Strategy};
use crate::storage::Snapshot;

use super::cost::{choose_strategy, estimate_cardinality, estimate_scan, PlannerConfig, Statistics};
use super::plan::{fold_plan, FoldReport, FoldedPlan, LogicalPlan, StageKind};
use super::PlannerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerMode {
    #[default]
    Adaptive,
    Static,
}

impl std::str::FromStr for PlannerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adaptive" => Ok(PlannerMode::Adaptive),
            "static" => Ok(PlannerMode::Static),
            other => Err(format!("unknown planner `{other}` (expected adaptive|static)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecConfig {
    pub mode: PlannerMode,
    /// Stages running at the same time.
    pub workers: usize,
    pub cache_mode: CacheMode,
    pub planner: PlannerConfig,
    pub fold: bool,
    pub join: JoinOptions,
    /// Static mode only: evaluate a stage's parent filter as soon as all of
    /// its dependencies have started (one stage of lookahead).
    pub prefetch: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self {
            mode: PlannerMode::Adaptive,
            workers: 4,
            cache_mode: CacheMode::On,
            planner: PlannerConfig::default(),
            fold: true,
            join: JoinOptions::default(),
            prefetch: true,
        }
    }
}

impl ExecConfig {
    pub fn with_mode(mut self, mode: PlannerMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheOutcome {
    Hit,
    Miss,
    Bypass,
    Off,
    /// Inner joins and root combines are never cached.
    NotCacheable,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTrace {
    pub id: usize,
    pub label: String,
    pub deps: Vec<usize>,
    /// Set when this stage was folded into another one and not executed.
    pub folded_into: Option<usize>,
    pub strategy: Option<Strategy>,
    pub parent_estimate: Option<f64>,
    pub child_estimate: Option<f64>,
    pub parent_actual: Option<u64>,
    pub child_actual: Option<u64>,
    /// The strategy was chosen from exact input sizes.
    pub decided_on_exact: bool,
    pub output: u64,
    pub cache: CacheOutcome,
    /// An input was empty; the join did not run.
    pub short_circuit: bool,
    pub decided_at_us: Option<u64>,
    pub started_at_us: u64,
    pub finished_at_us: u64,
    pub worker: usize,
    pub join: Option<JoinStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrefetchTrace {
    pub stage: usize,
    pub started_at_us: u64,
    pub finished_at_us: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ExecCounters {
    pub semi_joins_computed: u64,
    pub inner_joins_computed: u64,
    pub cache_hits: u64,
    pub short_circuits: u64,
    pub stages_executed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub mode: PlannerMode,
    /// One entry per stage, in id order.
    pub stages: Vec<StageTrace>,
    pub prefetches: Vec<PrefetchTrace>,
    pub counters: ExecCounters,
    pub fold: FoldReport,
    pub wall_us: u64,
}

impl Trace {
    pub fn stage(&self, id: usize) -> &StageTrace {
        &self.stages[id - 1]
    }

    /// Largest live working set of any executed join.
    pub fn peak_live_tuples(&self) -> u64 {
        self.stages.iter().filter_map(|s| s.join.as_ref()).map(JoinStats::live_tuples).max().unwrap_or(0)
    }

    pub fn bytes(&self) -> u64 {
        self.stages.iter().filter_map(|s| s.join.as_ref()).map(|j| j.bytes).sum()
    }
}

/// Result of one plan: the resolved root set and, for plans with inner
/// joins, one row of document ids per distinct binding tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutput {
    pub docs: DocSet,
    pub columns: Vec<String>,
    /// Sorted. Without inner joins, one single-column row per root doc.
    pub rows: Vec<Vec<GlobalDocId>>,
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub results: Vec<QueryOutput>,
    pub trace: Trace,
    pub plan: FoldedPlan,
}

#[derive(Debug)]
struct StageOut {
    result: Arc<DocSet>,
    pairs: Option<Arc<Vec<(GlobalDocId, GlobalDocId)>>>,
}

#[derive(Debug, Clone, Copy)]
struct Decision {
    strategy: Strategy,
    parent_est: f64,
    child_est: f64,
    at_us: u64,
}

enum Task {
    Stage(usize),
    Prefetch(usize),
}

#[derive(Default)]
struct Sched {
    pending: BTreeSet<usize>,
    started: BTreeSet<usize>,
    done: HashMap<usize, Arc<StageOut>>,
    prefetch_pending: BTreeSet<usize>,
    prefetched: HashMap<usize, Arc<DocSet>>,
    error: Option<PlannerError>,
    traces: HashMap<usize, StageTrace>,
    prefetches: Vec<PrefetchTrace>,
    counters: ExecCounters,
}

pub struct Executor<'a> {
    pub snapshot: &'a Snapshot,
    pub topology: &'a ClusterTopology,
    pub cache: Option<&'a SemanticCache>,
    pub config: ExecConfig,
}

struct Run<'a, 'b> {
    ex: &'b Executor<'a>,
    plan: &'b FoldedPlan,
    origin: Instant,
    decisions: HashMap<usize, Decision>,
}

impl<'a> Executor<'a> {
    pub fn new(snapshot: &'a Snapshot, topology: &'a ClusterTopology, cache: Option<&'a SemanticCache>, config: ExecConfig) -> Self {
        Self { snapshot, topology, cache, config }
    }

    fn cache(&self) -> Option<&'a SemanticCache> {
        match self.config.cache_mode {
            CacheMode::On => self.cache,
            CacheMode::Off | CacheMode::Bypass => None,
        }
    }

    /// Plans (folding if configured) and executes a batch of plans.
    pub fn run(&self, plans: &[LogicalPlan]) -> Result<BatchOutput, PlannerError> {
        for p in plans {
            p.validate(self.snapshot)?;
        }
        let folded = if self.config.fold { fold_plan(plans) } else { FoldedPlan::unfolded(super::plan::build_stages(plans)) };
        self.run_folded(folded)
    }

    pub fn run_folded(&self, plan: FoldedPlan) -> Result<BatchOutput, PlannerError> {
        let origin = Instant::now();
        let mut run = Run { ex: self, plan: &plan, origin, decisions: HashMap::new() };
        if self.config.mode == PlannerMode::Static {
            run.decide_all()?;
        }
        let sched = run.schedule()?;
        let mut counters = sched.counters;
        counters.stages_executed = sched.done.len() as u64;
        let results = (0..plan.graph.roots.len()).map(|i| run.assemble(i, &sched.done)).collect::<Vec<_>>();
        let mut stages = Vec::with_capacity(plan.graph.stages.len());
        let traces = sched.traces;
        for s in &plan.graph.stages {
            let rep = plan.representative(s.id);
            let t = if rep == s.id {
                traces.get(&s.id).cloned().expect("every executed stage is traced")
            } else {
                let mut t = traces.get(&rep).cloned().expect("representative traced");
                t.id = s.id;
                t.label = s.label.clone();
                t.folded_into = Some(rep);
                t.join = None;
                t
            };
            stages.push(StageTrace { deps: plan.deps(s.id).into_iter().collect(), ..t });
        }
        let trace = Trace {
            mode: self.config.mode,
            stages,
            prefetches: sched.prefetches,
            counters,
            fold: plan.report.clone(),
            wall_us: origin.elapsed().as_micros() as u64,
        };
        Ok(BatchOutput { results, trace, plan })
    }
}

impl Run<'_, '_> {
    fn now_us(&self) -> u64 {
        self.origin.elapsed().as_micros() as u64
    }

    /// Static mode: every strategy from pre-execution estimates.
    fn decide_all(&mut self) -> Result<(), PlannerError> {
        let g = &self.plan.graph;
        let stats = Statistics::default();
        for id in self.plan.executed_stages() {
            let StageKind::Edge(e) = g.stage(id).kind else { continue };
            let edge = &g.edges[e];
            let parent = &g.scans[edge.parent];
            let view = self.ex.snapshot.index(&parent.index)?;
            let parent_est = estimate_scan(view, &parent.filter);
            let child_est = estimate_cardinality(self.ex.snapshot, &g.scans[edge.child].node, &stats)?.value;
            let routable = join::routable(view, &edge.parent_key).is_ok();
            let strategy = choose_strategy(edge.kind, parent_est, child_est, routable, &self.ex.config.planner);
            self.decisions.insert(id, Decision { strategy, parent_est, child_est, at_us: self.now_us() });
        }
        Ok(())
    }

    fn schedule(&self) -> Result<Sched, PlannerError> {
        let executed = self.plan.executed_stages();
        let mut init = Sched { pending: executed.iter().copied().collect(), ..Sched::default() };
        if self.ex.config.mode == PlannerMode::Static && self.ex.config.prefetch {
            init.prefetch_pending = executed
                .iter()
                .copied()
                .filter(|&id| matches!(self.plan.graph.stage(id).kind, StageKind::Edge(_)))
                .collect();
        }
        let state = Mutex::new(init);
        let cv = Condvar::new();
        let workers = self.ex.config.workers.max(1);
        std::thread::scope(|s| {
            for w in 0..workers {
                let state = &state;
                let cv = &cv;
                s.spawn(move || self.worker(w, state, cv));
            }
        });
        let mut sched = state.into_inner().unwrap();
        if let Some(e) = sched.error.take() {
            return Err(e);
        }
        Ok(sched)
    }

    fn next_task(&self, st: &mut Sched) -> Option<Task> {
        let ready = st
            .pending
            .iter()
            .copied()
            .find(|&id| self.plan.deps(id).iter().all(|d| st.done.contains_key(d)));
        if let Some(id) = ready {
            st.pending.remove(&id);
            st.started.insert(id);
            st.prefetch_pending.remove(&id);
            return Some(Task::Stage(id));
        }
        let prefetch = st
            .prefetch_pending
            .iter()
            .copied()
            .find(|&id| self.plan.deps(id).iter().all(|d| st.started.contains(d)));
        if let Some(id) = prefetch {
            st.prefetch_pending.remove(&id);
            return Some(Task::Prefetch(id));
        }
        None
    }

    fn worker(&self, worker: usize, state: &Mutex<Sched>, cv: &Condvar) {
        loop {
            let (task, deps) = {
                let mut st = state.lock().unwrap();
                loop {
                    if st.error.is_some() || st.pending.is_empty() {
                        cv.notify_all();
                        return;
                    }
                    if let Some(t) = self.next_task(&mut st) {
                        let deps = match t {
                            Task::Stage(id) => self.plan.deps(id).iter().map(|d| (*d, st.done[d].clone())).collect(),
                            Task::Prefetch(_) => HashMap::new(),
                        };
                        let prefetched = match t {
                            Task::Stage(id) => st.prefetched.get(&id).cloned(),
                            Task::Prefetch(_) => None,
                        };
                        break ((t, prefetched), deps);
                    }
                    st = cv.wait(st).unwrap();
                }
            };
            match task {
                (Task::Prefetch(id), _) => {
                    let started = self.now_us();
                    let set = self.parent_set(id);
                    let finished = self.now_us();
                    let mut st = state.lock().unwrap();
                    if let Ok(set) = set {
                        st.prefetched.insert(id, Arc::new(set));
                    }
                    st.prefetches.push(PrefetchTrace { stage: id, started_at_us: started, finished_at_us: finished });
                    cv.notify_all();
                }
                (Task::Stage(id), prefetched) => {
                    let started = self.now_us();
                    let out = self.run_stage(id, &deps, prefetched);
                    let finished = self.now_us();
                    let mut st = state.lock().unwrap();
                    match out {
                        Ok((out, mut trace, counters)) => {
                            trace.started_at_us = started;
                            trace.finished_at_us = finished;
                            trace.worker = worker;
                            st.traces.insert(id, trace);
                            st.done.insert(id, Arc::new(out));
                            st.counters.semi_joins_computed += counters.semi_joins_computed;
                            st.counters.inner_joins_computed += counters.inner_joins_computed;
                            st.counters.cache_hits += counters.cache_hits;
                            st.counters.short_circuits += counters.short_circuits;
                        }
                        Err(e) => {
                            if st.error.is_none() {
                                st.error = Some(e);
                            }
                        }
                    }
                    cv.notify_all();
                }
            }
        }
    }

    fn parent_set(&self, id: usize) -> Result<DocSet, PlannerError> {
        let g = &self.plan.graph;
        let scan = match g.stage(id).kind {
            StageKind::Edge(e) => &g.scans[g.edges[e].parent],
            StageKind::Combine(s) => &g.scans[s],
        };
        Ok(self.ex.snapshot.eval_filter(&scan.index, &scan.filter)?)
    }

    /// Filter of a scan intersected with all of its clause results.
    fn resolve(&self, scan: usize, deps: &HashMap<usize, Arc<StageOut>>, own: Option<Arc<DocSet>>) -> Result<DocSet, PlannerError> {
        let g = &self.plan.graph;
        let mut clause_sets = Vec::new();
        for clause in &g.scans[scan].clauses {
            let mut union = DocSet::new();
            for &e in clause {
                union.union_with(&deps[&self.plan.representative(g.edges[e].stage)].result);
            }
            if union.is_empty() {
                return Ok(DocSet::new());
            }
            clause_sets.push(union);
        }
        let mut acc = match own {
            Some(s) => (*s).clone(),
            None => self.ex.snapshot.eval_filter(&g.scans[scan].index, &g.scans[scan].filter)?,
        };
        for c in &clause_sets {
            acc.intersect_with(c);
        }
        Ok(acc)
    }

    fn blank_trace(&self, id: usize) -> StageTrace {
        let s = self.plan.graph.stage(id);
        StageTrace {
            id,
            label: s.label.clone(),
            deps: Vec::new(),
            folded_into: None,
            strategy: None,
            parent_estimate: None,
            child_estimate: None,
            parent_actual: None,
            child_actual: None,
            decided_on_exact: false,
            output: 0,
            cache: CacheOutcome::NotCacheable,
            short_circuit: false,
            decided_at_us: None,
            started_at_us: 0,
            finished_at_us: 0,
            worker: 0,
            join: None,
        }
    }

    fn run_stage(
        &self,
        id: usize,
        deps: &HashMap<usize, Arc<StageOut>>,
        prefetched: Option<Arc<DocSet>>,
    ) -> Result<(StageOut, StageTrace, ExecCounters), PlannerError> {
        let g = &self.plan.graph;
        let mut trace = self.blank_trace(id);
        let mut counters = ExecCounters::default();
        let e = match g.stage(id).kind {
            StageKind::Combine(scan) => {
                let set = self.resolve(scan, deps, None)?;
                trace.output = set.len();
                let out = StageOut { result: Arc::new(set), pairs: None };
                return Ok((out, trace, counters));
            }
            StageKind::Edge(e) => e,
        };
        let edge = &g.edges[e];
        let parent = &g.scans[edge.parent];
        let child = &g.scans[edge.child];
        let child_set = self.resolve(edge.child, deps, None)?;
        trace.child_actual = Some(child_set.len());

        let cache = if edge.kind == JoinKind::Semi { self.ex.cache() } else { None };
        let key = match cache {
            Some(_) => Some(SemanticKey::at(edge.canonical.clone(), g.stage(id).indices.iter().map(String::as_str), self.ex.snapshot)?),
            None => None,
        };
        trace.cache = match (edge.kind, self.ex.config.cache_mode, cache) {
            (JoinKind::Inner, _, _) => CacheOutcome::NotCacheable,
            (_, CacheMode::Bypass, _) => CacheOutcome::Bypass,
            (_, _, None) => CacheOutcome::Off,
            _ => CacheOutcome::Miss,
        };
        if let (Some(c), Some(k)) = (cache, &key) {
            if let Some(hit) = c.get(k) {
                trace.cache = CacheOutcome::Hit;
                trace.output = hit.len();
                counters.cache_hits += 1;
                let out = StageOut { result: hit, pairs: None };
                return Ok((out, trace, counters));
            }
        }

        let parent_set = match prefetched {
            Some(p) => p,
            None => Arc::new(self.ex.snapshot.eval_filter(&parent.index, &parent.filter)?),
        };
        trace.parent_actual = Some(parent_set.len());

        let decision = match self.ex.config.mode {
            PlannerMode::Static => *self.decisions.get(&id).expect("static decisions cover every edge stage"),
            PlannerMode::Adaptive => {
                let view = self.ex.snapshot.index(&parent.index)?;
                let routable = join::routable(view, &edge.parent_key).is_ok();
                let (p, c) = (parent_set.len() as f64, child_set.len() as f64);
                let strategy = choose_strategy(edge.kind, p, c, routable, &self.ex.config.planner);
                trace.decided_on_exact = true;
                Decision { strategy, parent_est: p, child_est: c, at_us: self.now_us() }
            }
        };
        trace.strategy = Some(decision.strategy);
        trace.parent_estimate = Some(decision.parent_est);
        trace.child_estimate = Some(decision.child_est);
        trace.decided_at_us = Some(decision.at_us);

        if child_set.is_empty() || parent_set.is_empty() {
            trace.short_circuit = true;
            counters.short_circuits += 1;
            if let (Some(c), Some(k)) = (cache, &key) {
                c.put(k, DocSet::new());
            }
            let pairs = (edge.kind == JoinKind::Inner).then(|| Arc::new(Vec::new()));
            let out = StageOut { result: Arc::new(DocSet::new()), pairs };
            return Ok((out, trace, counters));
        }

        let input = JoinInput {
            snapshot: self.ex.snapshot,
            parent_index: &parent.index,
            parent_key: &edge.parent_key,
            parent_set: &parent_set,
            child_index: &child.index,
            child_key: &edge.child_key,
            child_set: &child_set,
            kind: edge.kind,
            projection: &[],
        };
        let (result, stats) = join::execute(&input, decision.strategy, self.ex.topology, &self.ex.config.join)?;
        trace.join = Some(stats);
        let (set, pairs) = match result {
            JoinResult::Semi(set) => {
                counters.semi_joins_computed += 1;
                if let Some(c) = self.ex.cache {
                    c.record_semi_join_computed();
                }
                if let (Some(c), Some(k)) = (cache, &key) {
                    c.put(k, set.clone());
                }
                (set, None)
            }
            JoinResult::Inner(rows) => {
                counters.inner_joins_computed += 1;
                let parents: DocSet = rows.iter().map(|r| r.parent).collect();
                let pairs: Vec<(GlobalDocId, GlobalDocId)> = rows.into_iter().map(|r| (r.parent, r.child)).collect();
                (parents, Some(Arc::new(pairs)))
            }
        };
        trace.output = set.len();
        Ok((StageOut { result: Arc::new(set), pairs }, trace, counters))
    }

    /// Result of plan `i`: resolved root docs, then binding tuples over the
    /// scans connected to the root by inner joins.
    fn assemble(&self, i: usize, done: &HashMap<usize, Arc<StageOut>>) -> QueryOutput {
        let g = &self.plan.graph;
        let root = g.roots[i];
        let docs = (*done[&self.plan.representative(g.root_stages[i])].result).clone();
        let mut columns = Vec::new();
        self.columns(root, &mut columns);
        let inner_edges: Vec<usize> = self.inner_edges(root);
        if inner_edges.is_empty() {
            let rows = docs.iter().map(|d| vec![d]).collect();
            return QueryOutput { docs, columns, rows };
        }
        let mut by_parent: HashMap<usize, HashMap<GlobalDocId, Vec<GlobalDocId>>> = HashMap::new();
        for &e in &self.all_inner_edges(root) {
            let out = &done[&self.plan.representative(g.edges[e].stage)];
            let mut m: HashMap<GlobalDocId, Vec<GlobalDocId>> = HashMap::new();
            if let Some(pairs) = &out.pairs {
                for &(p, c) in pairs.iter() {
                    m.entry(p).or_default().push(c);
                }
            }
            by_parent.insert(e, m);
        }
        let mut rows = Vec::new();
        for d in docs.iter() {
            rows.extend(self.expand(root, d, &by_parent));
        }
        rows.sort();
        rows.dedup();
        QueryOutput { docs, columns, rows }
    }

    fn inner_edges(&self, scan: usize) -> Vec<usize> {
        let g = &self.plan.graph;
        g.scans[scan]
            .clauses
            .iter()
            .filter(|c| c.len() == 1 && g.edges[c[0]].kind == JoinKind::Inner)
            .map(|c| c[0])
            .collect()
    }

    fn all_inner_edges(&self, scan: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for e in self.inner_edges(scan) {
            out.push(e);
            out.extend(self.all_inner_edges(self.plan.graph.edges[e].child));
        }
        out
    }

    fn columns(&self, scan: usize, out: &mut Vec<String>) {
        let s = &self.plan.graph.scans[scan];
        out.push(s.binding.clone().unwrap_or_else(|| format!("{}#{scan}", s.index)));
        for e in self.inner_edges(scan) {
            self.columns(self.plan.graph.edges[e].child, out);
        }
    }

    fn expand(
        &self,
        scan: usize,
        doc: GlobalDocId,
        by_parent: &HashMap<usize, HashMap<GlobalDocId, Vec<GlobalDocId>>>,
    ) -> Vec<Vec<GlobalDocId>> {
        let mut acc = vec![vec![doc]];
        for e in self.inner_edges(scan) {
            let child = self.plan.graph.edges[e].child;
            let kids = by_parent[&e].get(&doc).map(Vec::as_slice).unwrap_or(&[]);
            let mut next = Vec::new();
            for row in &acc {
                for &k in kids {
                    for sub in self.expand(child, k, by_parent) {
                        let mut r = row.clone();
                        r.extend(sub);
                        next.push(r);
                    }
                }
            }
            acc = next;
        }
        acc
    }
}

fn single(
    plan: &LogicalPlan,
    snapshot: &Snapshot,
    topology: &ClusterTopology,
    cache: Option<&SemanticCache>,
    config: ExecConfig,
) -> Result<(QueryOutput, Trace), PlannerError> {
    let ex = Executor::new(snapshot, topology, cache, config);
    let mut out = ex.run(std::slice::from_ref(plan))?;
    Ok((out.results.remove(0), out.trace))
}

/// Runs one plan choosing each strategy from exact upstream sizes.
pub fn execute_adaptive(
    plan: &LogicalPlan,
    snapshot: &Snapshot,
    topology: &ClusterTopology,
    cache: Option<&SemanticCache>,
) -> Result<(QueryOutput, Trace), PlannerError> {
    single(plan, snapshot, topology, cache, ExecConfig::default().with_mode(PlannerMode::Adaptive))
}

/// Runs one plan with every strategy fixed upfront from estimates.
pub fn execute_static(
    plan: &LogicalPlan,
    snapshot: &Snapshot,
    topology: &ClusterTopology,
    cache: Option<&SemanticCache>,
) -> Result<(QueryOutput, Trace), PlannerError> {
    single(plan, snapshot, topology, cache, ExecConfig::default().with_mode(PlannerMode::Static))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::Filter;
    use crate::planner::plan::{JoinNode, ScanNode};
    use crate::storage::Store;
    use crate::value::{Document, Scalar};
    use std::collections::BTreeSet;

    fn fixture() -> Store {
        let store = Store::new();
        store.create_index("posts", 2, "id").unwrap();
        store.create_index("phones", 2, "number").unwrap();
        store.create_index("cdr", 3, "id").unwrap();
        let topics = ["crime", "sport", "news"];
        store
            .add_documents("posts", (0..60i64).map(|i| Document::new().with("id", i).with("author", i % 20).with("topic", topics[(i % 3) as usize])))
            .unwrap();
        store.add_documents("phones", (0..40i64).map(|i| Document::new().with("number", 1000 + i).with("owner", i % 25))).unwrap();
        store
            .add_documents("cdr", (0..300i64).map(|i| Document::new().with("id", i).with("caller", 1000 + (i * 7) % 50).with("callee", 1000 + (i * 11) % 45)))
            .unwrap();
        for ix in ["posts", "phones", "cdr"] {
            store.seal_all(ix).unwrap();
        }
        store
    }

    fn plan() -> LogicalPlan {
        let suspicious =
            || ScanNode::new("phones").semi("owner", "author", ScanNode::new("posts").filter(Filter::term("topic", "crime")));
        LogicalPlan::new(
            ScanNode::new("cdr").any_of(vec![JoinNode::semi("caller", "number", suspicious()), JoinNode::semi("callee", "number", suspicious())]),
        )
    }

    /// Nested-loop answer on raw field values.
    fn oracle(snap: &Snapshot) -> BTreeSet<i64> {
        let int = |ix: &str, d: GlobalDocId, f: &str| snap.index(ix).unwrap().value_of(d, f).unwrap().and_then(|v| v.first()).and_then(Scalar::as_i64);
        let all = |ix: &str| snap.eval_filter(ix, &Filter::all()).unwrap();
        let authors: BTreeSet<i64> =
            snap.eval_filter("posts", &Filter::term("topic", "crime")).unwrap().iter().filter_map(|d| int("posts", d, "author")).collect();
        let numbers: BTreeSet<i64> =
            all("phones").iter().filter(|&d| authors.contains(&int("phones", d, "owner").unwrap())).filter_map(|d| int("phones", d, "number")).collect();
        all("cdr")
            .iter()
            .filter(|&d| numbers.contains(&int("cdr", d, "caller").unwrap()) || numbers.contains(&int("cdr", d, "callee").unwrap()))
            .filter_map(|d| int("cdr", d, "id"))
            .collect()
    }

    fn ids(snap: &Snapshot, set: &DocSet) -> BTreeSet<i64> {
        set.iter().filter_map(|d| snap.index("cdr").unwrap().value_of(d, "id").unwrap().and_then(|v| v.first()).and_then(Scalar::as_i64)).collect()
    }

    fn run(snap: &Snapshot, cache: Option<&SemanticCache>, cfg: ExecConfig) -> BatchOutput {
        let topo = ClusterTopology::new(3);
        Executor::new(snap, &topo, cache, cfg).run(&[plan()]).unwrap()
    }

    #[test]
    fn modes_agree_with_oracle() {
        let store = fixture();
        let snap = store.snapshot_all();
        let want = oracle(&snap);
        assert!(!want.is_empty());
        for mode in [PlannerMode::Adaptive, PlannerMode::Static] {
            for fold in [true, false] {
                for workers in [1, 3] {
                    let cfg = ExecConfig { mode, fold, workers, ..ExecConfig::default() };
                    let out = run(&snap, None, cfg);
                    assert_eq!(ids(&snap, &out.results[0].docs), want, "{mode:?} fold={fold} workers={workers}");
                }
            }
        }
    }

    #[test]
    fn folding_saves_one_semi_join() {
        let store = fixture();
        let snap = store.snapshot_all();
        let folded = run(&snap, None, ExecConfig { fold: true, ..ExecConfig::default() });
        let plain = run(&snap, None, ExecConfig { fold: false, ..ExecConfig::default() });
        assert_eq!(folded.trace.counters.semi_joins_computed, 3);
        assert_eq!(plain.trace.counters.semi_joins_computed, 4);
        assert_eq!(folded.trace.stage(2).folded_into, Some(1));
    }

    #[test]
    fn second_run_hits_cache_until_epoch_moves() {
        let store = fixture();
        let cache = SemanticCache::default();
        let snap = store.snapshot_all();
        let first = run(&snap, Some(&cache), ExecConfig::default());
        let second = run(&snap, Some(&cache), ExecConfig::default());
        assert_eq!(second.trace.counters.semi_joins_computed, 0);
        assert_eq!(second.trace.counters.cache_hits, 3);
        assert_eq!(first.results[0].docs, second.results[0].docs);

        store.add_documents("posts", [Document::new().with("id", 999i64).with("author", 24i64).with("topic", "crime")]).unwrap();
        store.seal_all("posts").unwrap();
        let snap = store.snapshot_all();
        let third = run(&snap, Some(&cache), ExecConfig::default());
        assert_eq!(ids(&snap, &third.results[0].docs), oracle(&snap));
        assert!(third.trace.counters.semi_joins_computed >= 1);
    }

    #[test]
    fn static_mode_decides_before_start() {
        let store = fixture();
        let snap = store.snapshot_all();
        let out = run(&snap, None, ExecConfig { mode: PlannerMode::Static, workers: 1, ..ExecConfig::default() });
        let first_start = out.trace.stages.iter().filter(|s| s.folded_into.is_none()).map(|s| s.started_at_us).min().unwrap();
        for s in out.trace.stages.iter().filter(|s| s.strategy.is_some()) {
            assert!(s.decided_at_us.unwrap() <= first_start);
            assert!(!s.decided_on_exact);
        }
    }

    #[test]
    fn inner_rows_pair_parent_and_child() {
        let store = fixture();
        let snap = store.snapshot_all();
        let p = LogicalPlan::new(ScanNode::new("phones").bind("ph").inner("owner", "author", ScanNode::new("posts").bind("po").filter(Filter::term("topic", "crime"))));
        let topo = ClusterTopology::new(2);
        let (out, _) = execute_adaptive(&p, &snap, &topo, None).unwrap();
        assert_eq!(out.columns, vec!["ph", "po"]);
        let v = |ix: &str, d: GlobalDocId, f: &str| snap.index(ix).unwrap().value_of(d, f).unwrap().and_then(|v| v.first()).and_then(Scalar::as_i64).unwrap();
        assert!(!out.rows.is_empty());
        for r in &out.rows {
            assert_eq!(v("phones", r[0], "owner"), v("posts", r[1], "author"));
        }
        let pairs = snap.eval_filter("phones", &Filter::all()).unwrap().len() as usize;
        assert!(out.rows.len() <= pairs * 20);
    }
}
