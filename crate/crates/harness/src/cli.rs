// SPDX-License-Identifier: Apache-2.0

//! The `docjoin` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use docjoin_core::cache::{CacheMode, SemanticCache};
use docjoin_core::exchange::ClusterTopology;
use docjoin_core::planner::{explain, ExecConfig, Executor, LogicalPlan, PlannerConfig, PlannerMode};
use docjoin_core::querylang::{lower_to_plan, parse_query, Catalog, Lowered, Params, QueryEngine, QueryError, QueryResult};
use docjoin_core::Store;
use serde_json::{json, Value};

use crate::bench::{run_benchmark, BenchConfig, BenchQuery};
use crate::cdr::{gen_cdr, CdrConfig, CdrQuery};
use crate::config::parse_config;
use crate::dataset::Sections;
use crate::finbench::{gen_finbench, FinbenchConfig};
use crate::investigation::{gen_investigation, investigation_plan, InvestigationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    /// Small financial graph with one planted answer per bundled query.
    FinbenchMini,
    /// Desk-scale financial graph (about 200k entities, 1M edges).
    Finbench,
    /// Two days of call-detail positions.
    Cdr,
    /// Four weeks of positions plus the Q1-Q6 windows.
    CdrShapes,
    /// Posts, phones and calls for the folding example.
    Investigation,
}

#[derive(Debug, Parser)]
#[command(name = "docjoin", version, about = "Join and path queries over a simulated document-store cluster")]
pub struct Cli {
    /// Settings file (`key = value` per line); flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub nodes: Option<u32>,
    /// Shards per generated index.
    #[arg(long, global = true)]
    pub shards: Option<usize>,
    /// Concurrent stages per query.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// on | off | bypass
    #[arg(long, global = true)]
    pub cache: Option<String>,
    /// adaptive | static
    #[arg(long, global = true)]
    pub planner: Option<String>,
    /// Print the stage trace after results.
    #[arg(long, global = true)]
    pub explain: bool,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    pub dataset: Option<DatasetKind>,
    /// Bulk file to load instead of generating a dataset.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct QueryArgs {
    /// Query text.
    #[arg(long, conflicts_with = "q_file")]
    pub q: Option<String>,
    #[arg(long)]
    pub q_file: Option<PathBuf>,
    /// NAME=VALUE; overrides the dataset's defaults.
    #[arg(long = "param")]
    pub params: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate (or read) the dataset and report its indices.
    Load {
        /// Also write it as a bulk file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a query; rows print as JSON lines.
    Query(QueryArgs),
    /// Show the staged plan and trace of a query or a JSON plan.
    Explain {
        #[command(flatten)]
        query: QueryArgs,
        /// `investigation` or a JSON plan file.
        #[arg(long)]
        plan: Option<String>,
    },
    /// Run a path query; paths print as JSON lines with a counter footer.
    Paths(QueryArgs),
    /// Closed-loop benchmark.
    Bench {
        /// Comma-separated query names; defaults to every query of the dataset.
        #[arg(long, value_delimiter = ',')]
        queries: Vec<String>,
        #[arg(long, default_value_t = 1)]
        users: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Index, segment and content statistics of the dataset.
    Stats,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub nodes: u32,
    pub shards: Option<usize>,
    pub workers: usize,
    pub seed: u64,
    pub cache: CacheMode,
    pub planner: PlannerMode,
    pub explain: bool,
    pub format: Format,
    pub dataset: DatasetKind,
    pub data: Option<PathBuf>,
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match (flag, file.get(key)) {
        (Some(v), _) => Ok(v),
        (None, Some(raw)) => raw.parse().map_err(|e| anyhow!("config `{key}`: {e}")),
        (None, None) => Ok(default),
    }
}

fn enum_value<T: ValueEnum>(raw: &str) -> Result<T> {
    T::from_str(raw, true).map_err(|e| anyhow!(e))
}

impl Settings {
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => parse_config(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?).map_err(|e| anyhow!("{}: {e}", p.display()))?,
            None => BTreeMap::new(),
        };
        let cache: String = pick(cli.cache.clone(), &file, "cache", "on".into())?;
        let planner: String = pick(cli.planner.clone(), &file, "planner", "adaptive".into())?;
        let format = match (cli.format, file.get("format")) {
            (Some(f), _) => f,
            (None, Some(raw)) => enum_value(raw)?,
            (None, None) => Format::Json,
        };
        let dataset = match (cli.dataset, file.get("dataset")) {
            (Some(d), _) => d,
            (None, Some(raw)) => enum_value(raw)?,
            (None, None) => DatasetKind::FinbenchMini,
        };
        let shards = match (cli.shards, file.get("shards")) {
            (Some(s), _) => Some(s),
            (None, Some(raw)) => Some(raw.parse().map_err(|e| anyhow!("config `shards`: {e}"))?),
            (None, None) => None,
        };
        let s = Self {
            nodes: pick(cli.nodes, &file, "nodes", 4)?,
            shards,
            workers: pick(cli.workers, &file, "workers", 4)?,
            seed: pick(cli.seed, &file, "seed", 1)?,
            cache: cache.parse().map_err(|e: String| anyhow!(e))?,
            planner: planner.parse().map_err(|e: String| anyhow!(e))?,
            explain: cli.explain || pick(None, &file, "explain", false)?,
            format,
            dataset,
            data: cli.data.clone().or_else(|| file.get("data").map(PathBuf::from)),
        };
        if s.nodes == 0 || s.workers == 0 || s.shards == Some(0) {
            bail!("--nodes, --shards and --workers must be at least 1");
        }
        Ok(s)
    }
}

/// A loaded dataset with everything needed to query it.
pub struct Env {
    pub store: Store,
    pub topology: ClusterTopology,
    pub cache: SemanticCache,
    pub catalog: Option<Catalog>,
    pub params: Params,
    pub pools: BTreeMap<String, Vec<String>>,
    pub planner: PlannerConfig,
    pub sections: Option<Sections>,
    pub bench: Vec<BenchQuery>,
}

impl Env {
    pub fn build(s: &Settings) -> Result<Self> {
        let store = Store::new();
        let mut env = Env {
            store,
            topology: ClusterTopology::new(s.nodes),
            cache: SemanticCache::new(256 << 20),
            catalog: None,
            params: Params::new(),
            pools: BTreeMap::new(),
            planner: PlannerConfig::default(),
            sections: None,
            bench: Vec::new(),
        };
        if let Some(path) = &s.data {
            let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            docjoin_core::bulk::load_bulk(&env.store, std::io::BufReader::new(f)).with_context(|| format!("loading {}", path.display()))?;
            if env.store.index_names().iter().any(|n| n == "AccountTransferAccount") {
                env.catalog = Some(Catalog::finbench_mini());
            }
            return Ok(env);
        }
        let sections = match s.dataset {
            DatasetKind::FinbenchMini | DatasetKind::Finbench => {
                let mut c = if s.dataset == DatasetKind::Finbench { FinbenchConfig { seed: s.seed, ..FinbenchConfig::default() } } else { FinbenchConfig::minimal(s.seed) };
                if let Some(n) = s.shards {
                    c.shards = n;
                }
                let d = gen_finbench(&c).map_err(|e| anyhow!(e))?;
                env.catalog = Some(Catalog::finbench_mini());
                env.params = d.params.clone();
                env.pools = d.pools.clone();
                env.bench = docjoin_core::querylang::workload::SUPPORTED
                    .iter()
                    .map(|(name, text)| BenchQuery::Text {
                        name: name.to_string(),
                        text: text.to_string(),
                        params: d.params.clone(),
                        pools: BTreeMap::new(),
                    })
                    .collect();
                d.sections
            }
            DatasetKind::Cdr | DatasetKind::CdrShapes => {
                let mut c = if s.dataset == DatasetKind::Cdr { CdrConfig { seed: s.seed, ..CdrConfig::default() } } else { CdrConfig::query_shapes(s.seed) };
                if let Some(n) = s.shards {
                    c.shards = n;
                }
                let d = gen_cdr(&c).map_err(|e| anyhow!(e))?;
                env.planner = c.planner_config();
                let sample: Vec<i64> = d.phones.iter().copied().take(16).collect();
                let queries: &[CdrQuery] = if c.windows.is_empty() { &[CdrQuery::Q1, CdrQuery::Q4] } else { &CdrQuery::ALL };
                env.bench = queries
                    .iter()
                    .map(|q| BenchQuery::Plans { name: format!("{q:?}"), plans: sample.iter().map(|&p| q.plan(p)).collect() })
                    .collect();
                env.pools.insert("PHONE".into(), d.phones.iter().map(i64::to_string).collect());
                d.sections
            }
            DatasetKind::Investigation => {
                let mut c = InvestigationConfig { seed: s.seed, ..InvestigationConfig::default() };
                if let Some(n) = s.shards {
                    c.shards = n;
                }
                env.bench = vec![BenchQuery::Plans { name: "investigation".into(), plans: vec![investigation_plan("crime")] }];
                gen_investigation(&c)
            }
        };
        sections.load(&env.store)?;
        env.sections = Some(sections);
        Ok(env)
    }

    pub fn exec(&self, s: &Settings) -> ExecConfig {
        ExecConfig { mode: s.planner, workers: s.workers, cache_mode: s.cache, planner: self.planner, ..ExecConfig::default() }
    }
}

fn query_text(a: &QueryArgs) -> Result<String> {
    match (&a.q, &a.q_file) {
        (Some(q), _) => Ok(q.clone()),
        (None, Some(p)) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        (None, None) => bail!("a query is required: pass --q TEXT or --q-file FILE"),
    }
}

fn query_params(env: &Env, a: &QueryArgs) -> Result<Params> {
    let mut p = env.params.clone();
    for kv in &a.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--param expects NAME=VALUE, got `{kv}`"))?;
        p.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(p)
}

fn query_error(e: &QueryError) -> Value {
    let (line, col) = e.position().map_or((None, None), |(l, c)| (Some(l), Some(c)));
    let mut err = json!({ "code": e.code(), "message": e.to_string(), "line": line, "column": col });
    if let QueryError::Unsupported(u) = e {
        err["construct"] = json!(u.construct());
    }
    json!({ "error": err })
}

fn lower(env: &Env, a: &QueryArgs) -> Result<std::result::Result<Lowered, QueryError>> {
    let text = query_text(a)?;
    let params = query_params(env, a)?;
    let Some(catalog) = &env.catalog else { bail!("this dataset has no query catalog; use --dataset finbench-mini or finbench") };
    Ok(parse_query(&text).and_then(|q| lower_to_plan(&q, catalog, &params)))
}

fn print_rows(out: &mut dyn Write, r: &QueryResult, format: Format) -> Result<()> {
    match format {
        Format::Json => {
            for row in &r.rows {
                let obj: serde_json::Map<String, Value> = r.columns.iter().cloned().zip(row.iter().cloned()).collect();
                writeln!(out, "{}", Value::Object(obj))?;
            }
        }
        Format::Table => {
            let cells: Vec<Vec<String>> = r.rows.iter().map(|row| row.iter().map(Value::to_string).collect()).collect();
            let mut w: Vec<usize> = r.columns.iter().map(String::len).collect();
            for row in &cells {
                for (i, c) in row.iter().enumerate() {
                    w[i] = w[i].max(c.len());
                }
            }
            let line = |vals: &[String]| vals.iter().enumerate().map(|(i, v)| format!("{v:<width$}", width = w[i])).collect::<Vec<_>>().join(" | ");
            writeln!(out, "{}", line(&r.columns))?;
            writeln!(out, "{}", w.iter().map(|n| "-".repeat(*n)).collect::<Vec<_>>().join("-+-"))?;
            for row in &cells {
                writeln!(out, "{}", line(row))?;
            }
            writeln!(out, "({} rows)", r.rows.len())?;
        }
    }
    Ok(())
}

fn run_query(env: &Env, s: &Settings, a: &QueryArgs, paths_only: bool, out: &mut dyn Write) -> Result<i32> {
    let lowered = match lower(env, a)? {
        Ok(l) => l,
        Err(e) => {
            writeln!(out, "{}", query_error(&e))?;
            return Ok(1);
        }
    };
    if paths_only && !matches!(lowered, Lowered::Paths(_)) {
        bail!("`paths` needs a path query (`MATCH p = ...`); use `query` for this one");
    }
    let snapshot = env.store.snapshot_all();
    let engine = QueryEngine::new(&snapshot, &env.topology, Some(&env.cache), env.exec(s));
    let r = match engine.execute(&lowered) {
        Ok(r) => r,
        Err(e) => {
            writeln!(out, "{}", query_error(&e))?;
            return Ok(1);
        }
    };
    print_rows(out, &r, s.format)?;
    if let Some(p) = &r.paths {
        let footer = json!({ "length": p.length, "paths": p.paths.len(), "counters": p.counters, "per_length": p.per_length });
        match s.format {
            Format::Json => writeln!(out, "{footer}")?,
            Format::Table => writeln!(out, "# {footer}")?,
        }
    }
    if s.explain {
        if let Some(b) = &r.batch {
            write!(out, "{}", explain(b, Some(env.cache.stats())))?;
        }
    }
    Ok(0)
}

fn run_explain(env: &Env, s: &Settings, a: &QueryArgs, plan: Option<&str>, out: &mut dyn Write) -> Result<i32> {
    let plan = match plan {
        Some("investigation") => investigation_plan("crime"),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            serde_json::from_str::<LogicalPlan>(&text).with_context(|| format!("parsing plan {path}"))?
        }
        None => match lower(env, a)? {
            Ok(Lowered::Plan(p)) => p.plan,
            Ok(Lowered::Paths(p)) => {
                writeln!(out, "{}", serde_json::to_string_pretty(&p.spec)?)?;
                return Ok(0);
            }
            Err(e) => {
                writeln!(out, "{}", query_error(&e))?;
                return Ok(1);
            }
        },
    };
    let snapshot = env.store.snapshot_all();
    let batch = Executor::new(&snapshot, &env.topology, Some(&env.cache), env.exec(s)).run(std::slice::from_ref(&plan))?;
    match s.format {
        Format::Table => write!(out, "{}", explain(&batch, Some(env.cache.stats())))?,
        Format::Json => writeln!(out, "{}", json!({ "trace": batch.trace, "cache": env.cache.stats() }))?,
    }
    Ok(0)
}

fn stats(env: &Env) -> Value {
    let snapshot = env.store.snapshot_all();
    let mut indices = Vec::new();
    for name in snapshot.index_names() {
        let v = snapshot.index(name).expect("listed index");
        indices.push(json!({
            "index": name,
            "docs": v.doc_count(),
            "shards": v.meta().shard_count,
            "routing": v.meta().routing_field,
            "segments": v.segments().len(),
            "epoch": v.epoch(),
        }));
    }
    json!({
        "indices": indices,
        "content_hash": env.sections.as_ref().map(Sections::content_hash),
        "nodes": env.topology.node_count(),
        "bytes_exchanged": env.topology.total_bytes(),
        "cache": env.cache.stats(),
    })
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let s = Settings::resolve(cli)?;
    let mut s = s;
    if matches!(&cli.command, Command::Explain { plan: Some(p), .. } if p == "investigation") && s.data.is_none() {
        s.dataset = DatasetKind::Investigation;
    }
    let env = Env::build(&s)?;
    match &cli.command {
        Command::Load { out: path } => {
            if let (Some(p), Some(sec)) = (path, &env.sections) {
                let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
                let mut w = std::io::BufWriter::new(f);
                sec.write_bulk(&mut w)?;
                w.flush()?;
            }
            writeln!(out, "{}", stats(&env))?;
            Ok(0)
        }
        Command::Query(a) => run_query(&env, &s, a, false, out),
        Command::Paths(a) => run_query(&env, &s, a, true, out),
        Command::Explain { query, plan } => run_explain(&env, &s, query, plan.as_deref(), out),
        Command::Bench { queries, users, samples } => {
            let chosen: Vec<BenchQuery> = if queries.is_empty() {
                env.bench.clone()
            } else {
                queries
                    .iter()
                    .map(|n| env.bench.iter().find(|q| q.name() == n).cloned().ok_or_else(|| anyhow!("unknown query `{n}` for this dataset")))
                    .collect::<Result<_>>()?
            };
            if chosen.is_empty() {
                bail!("no benchmark queries for this dataset");
            }
            let snapshot = env.store.snapshot_all();
            let cfg = BenchConfig { users: *users, min_samples: *samples, seed: s.seed, exec: env.exec(&s) };
            let report = run_benchmark(&snapshot, &env.topology, &env.cache, env.catalog.as_ref(), &chosen, &cfg);
            writeln!(out, "{}", serde_json::to_string(&report)?)?;
            Ok(if report.queries.iter().any(|q| q.errors > 0) { 1 } else { 0 })
        }
        Command::Stats => {
            writeln!(out, "{}", stats(&env))?;
            Ok(0)
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 when a query or benchmark failed,
/// 2 on usage or setup errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}
