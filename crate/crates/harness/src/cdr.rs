// SPDX-License-Identifier: Apache-2.0

//! Phone position records: one index per day, plus optional window indices
//! holding copies of consecutive days.
//!
//! Every phone has a home cell and is seen near it. Within a day the
//! records are spread evenly over the phones, so each phone appears
//! `docs_per_day / phones` times (rounded either way).

use std::collections::BTreeMap;

use docjoin_core::planner::{LogicalPlan, PlannerConfig, ScanNode};
use docjoin_core::{Document, Filter};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::Sections;

/// Documents per day in the reference deployment the planner thresholds
/// are tuned for.
pub const REFERENCE_DOCS_PER_DAY: f64 = 156e6;
pub const PHONE_BASE: i64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Window {
    pub name: String,
    pub first_day: usize,
    pub days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdrConfig {
    pub seed: u64,
    pub days: usize,
    pub docs_per_day: usize,
    pub phones: usize,
    pub cells: u32,
    pub areas: u32,
    pub shards: usize,
    pub windows: Vec<Window>,
}

impl Default for CdrConfig {
    fn default() -> Self {
        Self { seed: 1, days: 2, docs_per_day: 50_000, phones: 2_083, cells: 400, areas: 2, shards: 8, windows: Vec::new() }
    }
}

impl CdrConfig {
    /// Four weeks, 24 records per phone per day, with the week, fortnight
    /// and full-span windows the Q1-Q6 shapes scan.
    pub fn query_shapes(seed: u64) -> Self {
        let w = |name: &str, first_day, days| Window { name: name.to_string(), first_day, days };
        Self {
            seed,
            days: 28,
            docs_per_day: 5_000,
            phones: 208,
            cells: 400,
            areas: 2,
            shards: 8,
            windows: vec![w("week0", 0, 7), w("week1", 7, 7), w("fortnight0", 0, 14), w("fortnight1", 14, 14), w("all", 0, 28)],
        }
    }

    /// Planner thresholds scaled to this data volume.
    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig::scaled(REFERENCE_DOCS_PER_DAY / self.docs_per_day as f64)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (k, v) in [("days", self.days), ("docs_per_day", self.docs_per_day), ("phones", self.phones), ("shards", self.shards)] {
            if v < 1 {
                return Err(format!("{k} must be at least 1"));
            }
        }
        if self.cells < 1 || self.areas < 1 || self.areas > self.cells {
            return Err("need 1 <= areas <= cells".into());
        }
        for w in &self.windows {
            if w.days < 1 || w.first_day + w.days > self.days {
                return Err(format!("window `{}` lies outside the generated days", w.name));
            }
        }
        Ok(())
    }
}

pub fn day_index(day: usize) -> String {
    format!("cdr-d{day:03}")
}

pub fn window_index(name: &str) -> String {
    format!("cdr-{name}")
}

#[derive(Debug, Clone)]
pub struct CdrDataset {
    pub config: CdrConfig,
    pub sections: Sections,
    pub phones: Vec<i64>,
}

pub fn gen_cdr(config: &CdrConfig) -> Result<CdrDataset, String> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let phones: Vec<i64> = (0..config.phones as i64).map(|p| PHONE_BASE + p).collect();
    let home: Vec<u32> = (0..config.phones).map(|_| rng.gen_range(0..config.cells)).collect();
    let mut sections = Sections::default();
    let mut days = Vec::with_capacity(config.days);
    let mut rec = 0i64;
    for day in 0..config.days {
        let mut owners: Vec<usize> = (0..config.docs_per_day).map(|i| i % config.phones).collect();
        owners.shuffle(&mut rng);
        let docs: Vec<Document> = owners
            .into_iter()
            .map(|p| {
                rec += 1;
                let cell = (home[p] + rng.gen_range(0..3)) % config.cells;
                Document::new()
                    .with("rec", rec)
                    .with("phone_id", phones[p])
                    .with("cell", i64::from(cell))
                    .with("area", i64::from(cell * config.areas / config.cells))
                    .with("day", day as i64)
                    .with("timestamp", day as i64 * 86_400 + rng.gen_range(0..86_400))
            })
            .collect();
        days.push(docs);
    }
    for (day, docs) in days.iter().enumerate() {
        sections.push(&day_index(day), "rec", config.shards, docs.clone());
    }
    for w in &config.windows {
        let docs = days[w.first_day..w.first_day + w.days].iter().flatten().cloned().collect();
        sections.push(&window_index(&w.name), "rec", config.shards, docs);
    }
    Ok(CdrDataset { config: config.clone(), sections, phones })
}

impl CdrDataset {
    /// Average records per phone over the generated days.
    pub fn positions_per_phone(&self) -> BTreeMap<i64, usize> {
        let mut m = BTreeMap::new();
        for day in 0..self.config.days {
            for d in self.sections.get(&day_index(day)).unwrap_or(&[]) {
                let p = d.get("phone_id").and_then(|v| v.first()).and_then(|s| s.as_i64()).expect("phone_id");
                *m.entry(p).or_insert(0) += 1;
            }
        }
        m
    }
}

/// The six reference join shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CdrQuery {
    /// Phones in one area on day 0 that are seen in another area on day 1.
    Q1,
    /// As Q1 over consecutive weeks.
    Q2,
    /// Records at any location one given phone visited.
    Q3,
    /// Phones seen on both of two days.
    Q4,
    /// As Q4 over consecutive weeks.
    Q5,
    /// As Q4 over consecutive fortnights.
    Q6,
}

impl CdrQuery {
    pub const ALL: [CdrQuery; 6] = [CdrQuery::Q1, CdrQuery::Q2, CdrQuery::Q3, CdrQuery::Q4, CdrQuery::Q5, CdrQuery::Q6];

    /// Needs the windows of [`CdrConfig::query_shapes`].
    pub fn plan(self, phone: i64) -> LogicalPlan {
        let area = |ix: String, a: i64| ScanNode::new(&ix).filter(Filter::term("area", a));
        let (parent, child) = match self {
            CdrQuery::Q1 => (area(day_index(0), 0), area(day_index(1), 1)),
            CdrQuery::Q2 => (area(window_index("week0"), 0), area(window_index("week1"), 1)),
            CdrQuery::Q3 => {
                let ix = window_index("all");
                let child = ScanNode::new(&ix).filter(Filter::term("phone_id", phone));
                return LogicalPlan::new(ScanNode::new(&ix).semi("cell", "cell", child));
            }
            CdrQuery::Q4 => (ScanNode::new(&day_index(0)), ScanNode::new(&day_index(1))),
            CdrQuery::Q5 => (ScanNode::new(&window_index("week0")), ScanNode::new(&window_index("week1"))),
            CdrQuery::Q6 => (ScanNode::new(&window_index("fortnight0")), ScanNode::new(&window_index("fortnight1"))),
        };
        LogicalPlan::new(parent.semi("phone_id", "phone_id", child))
    }
}
