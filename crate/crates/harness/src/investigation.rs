// SPDX-License-Identifier: Apache-2.0

//! The call-record investigation: find calls where either party owns a
//! phone whose owner wrote about a given topic. Both call parties are
//! matched against the same suspicious-phone subquery, which folding
//! executes once.

use std::collections::BTreeSet;

use docjoin_core::planner::{JoinNode, LogicalPlan, ScanNode};
use docjoin_core::{Document, Filter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Sections;

pub const TOPICS: [&str; 4] = ["crime", "sport", "news", "travel"];

#[derive(Debug, Clone, Copy)]
pub struct InvestigationConfig {
    pub seed: u64,
    pub people: i64,
    pub posts: i64,
    pub phones: i64,
    pub calls: i64,
    pub shards: usize,
}

impl Default for InvestigationConfig {
    fn default() -> Self {
        Self { seed: 1, people: 2_000, posts: 1_000, phones: 3_000, calls: 5_000, shards: 3 }
    }
}

pub fn gen_investigation(c: &InvestigationConfig) -> Sections {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let posts = (0..c.posts)
        .map(|i| Document::new().with("id", i).with("author", rng.gen_range(0..c.people)).with("topic", TOPICS[rng.gen_range(0..TOPICS.len())]))
        .collect();
    let phones = (0..c.phones).map(|i| Document::new().with("number", 5_000 + i).with("owner", rng.gen_range(0..c.people))).collect();
    let calls = (0..c.calls)
        .map(|i| {
            Document::new()
                .with("id", i)
                .with("caller", 5_000 + rng.gen_range(0..c.phones))
                .with("callee", 5_000 + rng.gen_range(0..c.phones))
                .with("duration", rng.gen_range(1..3_600i64))
        })
        .collect();
    let mut s = Sections::default();
    s.push("posts", "id", c.shards, posts);
    s.push("phones", "number", c.shards, phones);
    s.push("calls", "id", c.shards, calls);
    s
}

fn suspicious(topic: &str) -> ScanNode {
    ScanNode::new("phones").semi("owner", "author", ScanNode::new("posts").filter(Filter::term("topic", topic)))
}

/// Five stages: the two phone subqueries (1, 2), the caller and callee
/// joins (3, 4) and their disjunction (5).
pub fn investigation_plan(topic: &str) -> LogicalPlan {
    LogicalPlan::new(
        ScanNode::new("calls").any_of(vec![JoinNode::semi("caller", "number", suspicious(topic)), JoinNode::semi("callee", "number", suspicious(topic))]),
    )
}

fn int(d: &Document, f: &str) -> i64 {
    d.get(f).and_then(|v| v.first()).and_then(|s| s.as_i64()).expect("integer field")
}

/// Call ids by direct evaluation over the generated documents.
pub fn investigation_oracle(s: &Sections, topic: &str) -> BTreeSet<i64> {
    let authors: BTreeSet<i64> = s
        .get("posts")
        .unwrap()
        .iter()
        .filter(|d| d.get("topic").and_then(|v| v.first()) == Some(&topic.into()))
        .map(|d| int(d, "author"))
        .collect();
    let numbers: BTreeSet<i64> = s.get("phones").unwrap().iter().filter(|d| authors.contains(&int(d, "owner"))).map(|d| int(d, "number")).collect();
    s.get("calls")
        .unwrap()
        .iter()
        .filter(|d| numbers.contains(&int(d, "caller")) || numbers.contains(&int(d, "callee")))
        .map(|d| int(d, "id"))
        .collect()
}
