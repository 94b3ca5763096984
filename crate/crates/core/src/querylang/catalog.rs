// SPDX-License-Identifier: Apache-2.0

//! Label to index mapping for a dataset namespace.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntityDef {
    pub index: String,
    /// Field other documents reference.
    pub key: String,
}

/// An attributed edge stored as its own document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeDef {
    pub index: String,
    pub source_label: String,
    /// Field on the edge holding the source's key.
    pub source_field: String,
    pub target_label: String,
    pub target_field: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Catalog {
    pub name: String,
    pub entities: BTreeMap<String, EntityDef>,
    pub edges: BTreeMap<String, EdgeDef>,
}

impl Catalog {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), ..Self::default() }
    }

    pub fn entity(mut self, label: &str, index: &str, key: &str) -> Self {
        self.entities.insert(label.to_string(), EntityDef { index: index.to_string(), key: key.to_string() });
        self
    }

    pub fn edge(mut self, label: &str, index: &str, source: (&str, &str), target: (&str, &str)) -> Self {
        self.edges.insert(
            label.to_string(),
            EdgeDef {
                index: index.to_string(),
                source_label: source.0.to_string(),
                source_field: source.1.to_string(),
                target_label: target.0.to_string(),
                target_field: target.1.to_string(),
            },
        );
        self
    }

    /// Index backing a node or edge label.
    pub fn index_of(&self, label: &str) -> Option<&str> {
        self.entities.get(label).map(|e| e.index.as_str()).or_else(|| self.edges.get(label).map(|e| e.index.as_str()))
    }

    /// The financial-transfer graph used by the bundled workload. Every
    /// label maps to the index of the same name; entities are keyed by
    /// `id`.
    pub fn finbench_mini() -> Self {
        let mut c = Self::new("ldbc-finbench");
        for label in ["Person", "Account", "Loan", "Medium", "Company"] {
            c = c.entity(label, label, "id");
        }
        c.edge("AccountTransferAccount", "AccountTransferAccount", ("Account", "fromId"), ("Account", "toId"))
            .edge("MediumSignInAccount", "MediumSignInAccount", ("Medium", "mediumId"), ("Account", "accountId"))
            .edge("LoanDepositAccount", "LoanDepositAccount", ("Loan", "loanId"), ("Account", "accountId"))
            .edge("AccountRepayLoan", "AccountRepayLoan", ("Account", "accountId"), ("Loan", "loanId"))
            .edge("PersonOwnAccount", "PersonOwnAccount", ("Person", "personId"), ("Account", "accountId"))
            .edge("CompanyOwnAccount", "CompanyOwnAccount", ("Company", "companyId"), ("Account", "accountId"))
            .edge("PersonApplyLoan", "PersonApplyLoan", ("Person", "personId"), ("Loan", "loanId"))
            .edge("PersonGuaranteePerson", "PersonGuaranteePerson", ("Person", "fromId"), ("Person", "toId"))
    }
}
