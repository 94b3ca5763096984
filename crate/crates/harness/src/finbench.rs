// SPDX-License-Identifier: Apache-2.0

//! A small financial-transfer graph: five entity labels and eight edge
//! labels, every edge stored as its own document carrying the key fields
//! of both endpoints plus `createTime` (and `amount` where meaningful).
//!
//! Random edges are sprinkled over the entities, then one matching motif
//! per bundled query is planted around fixed ids, so each query has at
//! least one answer under [`FinbenchDataset::params`].

use std::collections::BTreeMap;

use docjoin_core::querylang::{Catalog, Params};
use docjoin_core::{Document, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::Sections;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinbenchConfig {
    pub seed: u64,
    pub persons: usize,
    pub companies: usize,
    pub accounts: usize,
    pub loans: usize,
    pub media: usize,
    pub transfers: usize,
    pub guarantees: usize,
    /// Count used for each remaining edge label.
    pub other_edges: usize,
    pub shards: usize,
    /// `createTime` is drawn from `0..time_span`.
    pub time_span: i64,
}

impl Default for FinbenchConfig {
    /// Roughly 200k entity and 1M edge documents.
    fn default() -> Self {
        Self {
            seed: 1,
            persons: 40_000,
            companies: 10_000,
            accounts: 120_000,
            loans: 20_000,
            media: 10_000,
            transfers: 700_000,
            guarantees: 40_000,
            other_edges: 45_000,
            shards: 4,
            time_span: 1_000,
        }
    }
}

impl FinbenchConfig {
    /// Enough to host the planted motifs and some noise; small enough for
    /// nested-loop reference evaluation.
    pub fn minimal(seed: u64) -> Self {
        Self {
            seed,
            persons: 24,
            companies: 6,
            accounts: 40,
            loans: 12,
            media: 6,
            transfers: 90,
            guarantees: 24,
            other_edges: 16,
            shards: 2,
            time_span: 1_000,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let need = [("persons", self.persons, 3), ("companies", self.companies, 2), ("accounts", self.accounts, 20), ("loans", self.loans, 3), ("media", self.media, 2)];
        for (k, v, min) in need {
            if v < min {
                return Err(format!("{k} must be at least {min} to host the planted motifs"));
            }
        }
        if self.shards < 1 || self.time_span < 10 {
            return Err("need shards >= 1 and time_span >= 10".into());
        }
        Ok(())
    }
}

/// Query window and the ids the motifs are planted around.
pub const START: i64 = 300;
pub const END: i64 = 700;
const T: i64 = 500;
/// A person and an account share this id.
pub const PERSON_ID: i64 = 1;
pub const ACCOUNT_ID: i64 = 2;

#[derive(Debug, Clone)]
pub struct FinbenchDataset {
    pub config: FinbenchConfig,
    pub sections: Sections,
    /// Values for START, END, PERSON_ID and ACCOUNT_ID under which every
    /// bundled query has an answer.
    pub params: Params,
    /// Id pools for parameter sampling.
    pub pools: BTreeMap<String, Vec<String>>,
}

struct Edges {
    docs: Vec<Document>,
    next_id: i64,
}

impl Edges {
    fn new() -> Self {
        Self { docs: Vec::new(), next_id: 0 }
    }

    fn add(&mut self, fields: &[(&str, Scalar)]) {
        let mut d = Document::new().with("id", self.next_id);
        self.next_id += 1;
        for (k, v) in fields {
            d = d.with(k, v.clone());
        }
        self.docs.push(d);
    }
}

fn int(v: i64) -> Scalar {
    Scalar::Int(v)
}

fn flag(b: bool) -> Scalar {
    Scalar::Text(b.to_string())
}

pub fn gen_finbench(config: &FinbenchConfig) -> Result<FinbenchDataset, String> {
    config.validate()?;
    let c = config;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let time = |rng: &mut ChaCha8Rng| int(rng.gen_range(0..c.time_span));
    // a few zero amounts exercise the open-range filter
    let amount = |rng: &mut ChaCha8Rng| Scalar::Float(if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(100..1_000_000) as f64 / 100.0 });

    let persons: Vec<Document> =
        (0..c.persons as i64).map(|i| Document::new().with("id", i).with("name", format!("person{i}")).with("isBlocked", flag(rng.gen_bool(0.1)))).collect();
    let companies: Vec<Document> =
        (0..c.companies as i64).map(|i| Document::new().with("id", i).with("name", format!("company{i}")).with("isBlocked", flag(rng.gen_bool(0.1)))).collect();
    let account_types = ["checking", "savings", "brokerage"];
    let accounts: Vec<Document> = (0..c.accounts as i64)
        .map(|i| Document::new().with("id", i).with("type", account_types[rng.gen_range(0..3)]).with("isBlocked", flag(rng.gen_bool(0.1))))
        .collect();
    let loans: Vec<Document> = (0..c.loans as i64)
        .map(|i| {
            let amt = rng.gen_range(1_000..100_000) as f64;
            Document::new().with("id", i).with("loanAmount", amt).with("balance", (amt * rng.gen_range(0.0..1.0)).round())
        })
        .collect();
    let medium_types = ["POS", "IPHONE", "PAD", "WEB"];
    // medium 1 hosts a planted motif and must be blocked
    let media: Vec<Document> = (0..c.media as i64)
        .map(|i| Document::new().with("id", i).with("mediumType", medium_types[rng.gen_range(0..4)]).with("isBlocked", flag(i == 1 || rng.gen_bool(0.2))))
        .collect();

    let pick = |rng: &mut ChaCha8Rng, n: usize| int(rng.gen_range(0..n as i64));
    let mut ata = Edges::new();
    for _ in 0..c.transfers {
        let (from, to, a, t) = (pick(&mut rng, c.accounts), pick(&mut rng, c.accounts), amount(&mut rng), time(&mut rng));
        ata.add(&[("fromId", from), ("toId", to), ("amount", a), ("createTime", t)]);
    }
    let mut pgp = Edges::new();
    for _ in 0..c.guarantees {
        let (from, to, t) = (pick(&mut rng, c.persons), pick(&mut rng, c.persons), time(&mut rng));
        pgp.add(&[("fromId", from), ("toId", to), ("createTime", t)]);
    }
    let (mut msia, mut lda, mut arl, mut poa, mut coa, mut pal) = (Edges::new(), Edges::new(), Edges::new(), Edges::new(), Edges::new(), Edges::new());
    for _ in 0..c.other_edges {
        let t = time(&mut rng);
        msia.add(&[("mediumId", pick(&mut rng, c.media)), ("accountId", pick(&mut rng, c.accounts)), ("createTime", t)]);
        let (l, acc, a, t) = (pick(&mut rng, c.loans), pick(&mut rng, c.accounts), amount(&mut rng), time(&mut rng));
        lda.add(&[("loanId", l), ("accountId", acc), ("amount", a), ("createTime", t)]);
        let (acc, l, a, t) = (pick(&mut rng, c.accounts), pick(&mut rng, c.loans), amount(&mut rng), time(&mut rng));
        arl.add(&[("accountId", acc), ("loanId", l), ("amount", a), ("createTime", t)]);
        let (p, acc, t) = (pick(&mut rng, c.persons), pick(&mut rng, c.accounts), time(&mut rng));
        poa.add(&[("personId", p), ("accountId", acc), ("createTime", t)]);
        let (co, acc, t) = (pick(&mut rng, c.companies), pick(&mut rng, c.accounts), time(&mut rng));
        coa.add(&[("companyId", co), ("accountId", acc), ("createTime", t)]);
        let (p, l, t) = (pick(&mut rng, c.persons), pick(&mut rng, c.loans), time(&mut rng));
        pal.add(&[("personId", p), ("loanId", l), ("createTime", t)]);
    }

    // Planted motifs. Account ids 10.. are helpers; PERSON_ID doubles as an
    // account id for the queries that filter accounts by it.
    let (p, a) = (PERSON_ID, ACCOUNT_ID);
    let (o, o2, z, b, s, d, k, w) = (10, 11, 12, 13, 14, 15, 16, 17);
    let (loan, loan2, medium, company, guarantor) = (1, 2, 1, 1, 2);
    let tr = |e: &mut Edges, from: i64, to: i64| e.add(&[("fromId", int(from)), ("toId", int(to)), ("amount", Scalar::Float(100.0)), ("createTime", int(T))]);
    // blocked medium signs into an account that received money from ACCOUNT_ID
    msia.add(&[("mediumId", int(medium)), ("accountId", int(o)), ("createTime", int(T))]);
    tr(&mut ata, a, o);
    // loan deposit flows to an account owned by PERSON_ID
    lda.add(&[("loanId", int(loan)), ("accountId", int(o2)), ("amount", Scalar::Float(500.0)), ("createTime", int(T))]);
    tr(&mut ata, o2, z);
    poa.add(&[("personId", int(p)), ("accountId", int(z)), ("createTime", int(T))]);
    // a 2-hop cycle through ACCOUNT_ID
    tr(&mut ata, a, b);
    tr(&mut ata, b, a);
    // money leaves the person's account
    tr(&mut ata, z, w);
    // in and out of the account sharing PERSON_ID, plus loan activity on it
    tr(&mut ata, s, p);
    tr(&mut ata, p, d);
    lda.add(&[("loanId", int(loan)), ("accountId", int(p)), ("amount", Scalar::Float(250.0)), ("createTime", int(T))]);
    arl.add(&[("accountId", int(p)), ("loanId", int(loan)), ("amount", Scalar::Float(75.0)), ("createTime", int(T))]);
    // PERSON_ID guarantees someone who applied for a loan
    pgp.add(&[("fromId", int(p)), ("toId", int(guarantor)), ("createTime", int(T))]);
    pal.add(&[("personId", int(guarantor)), ("loanId", int(loan2)), ("createTime", int(T))]);
    // a company account received money from the person's account
    coa.add(&[("companyId", int(company)), ("accountId", int(k)), ("createTime", int(T))]);
    tr(&mut ata, z, k);

    let mut sections = Sections::default();
    for (label, docs) in [("Person", persons), ("Company", companies), ("Account", accounts), ("Loan", loans), ("Medium", media)] {
        sections.push(label, "id", c.shards, docs);
    }
    let catalog = Catalog::finbench_mini();
    for (label, e) in [
        ("AccountTransferAccount", ata),
        ("PersonGuaranteePerson", pgp),
        ("MediumSignInAccount", msia),
        ("LoanDepositAccount", lda),
        ("AccountRepayLoan", arl),
        ("PersonOwnAccount", poa),
        ("CompanyOwnAccount", coa),
        ("PersonApplyLoan", pal),
    ] {
        let routing = catalog.edges[label].source_field.clone();
        sections.push(label, &routing, c.shards, e.docs);
    }

    let params: Params = [("START", START), ("END", END), ("PERSON_ID", p), ("ACCOUNT_ID", a)].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let ids = |n: usize| (0..n as i64).map(|i| i.to_string()).collect::<Vec<_>>();
    let pools = BTreeMap::from([
        ("PERSON_ID".to_string(), ids(c.persons.min(c.accounts))),
        ("ACCOUNT_ID".to_string(), ids(c.accounts)),
    ]);
    Ok(FinbenchDataset { config: c.clone(), sections, params, pools })
}
