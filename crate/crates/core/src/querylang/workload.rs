// SPDX-License-Identifier: Apache-2.0

//! The financial-transfer read queries, as text.
//!
//! Parameters: `START`/`END` bound a `createTime` window, `PERSON_ID` and
//! `ACCOUNT_ID` pick entities. `UNSUPPORTED` holds one representative per
//! construct the engine rejects, with the error it must produce.

pub const TCR1: &str = r#"SELECT other.id, medium.mediumType, medium.id
FROM "ldbc-finbench"
MATCH (medium:Medium WHERE "isBlocked:true")
      ->(:MediumSignInAccount)
      ->(other:Account)
      (
        (:Account)
        <-(:AccountTransferAccount WHERE "createTime:{START TO END}")
        <-(:Account)
      ){1,3}
      (account:Account WHERE "id:ACCOUNT_ID")"#;

pub const TCR2: &str = r#"SELECT other.id, l.loanAmount, l.balance
FROM "ldbc-finbench"
MATCH (l:Loan)
      ->(:LoanDepositAccount WHERE "createTime:{START TO END}")
      ->(other:Account)
      (
        (:Account)
        ->(:AccountTransferAccount WHERE "createTime:{START TO END}")
        ->(:Account)
      ){1,3}
      (:Account)<-(:PersonOwnAccount)<-(person:Person WHERE "id:PERSON_ID")"#;

pub const TCR3: &str = r#"SELECT trace
FROM "ldbc-finbench"
MATCH trace = ALL SHORTEST (src:Account WHERE "id:ACCOUNT_ID")
      (
        (:Account)
        ->(:AccountTransferAccount WHERE "createTime:{START TO END}")
        ->(:Account)
      ){1,10}
      (dst:Account WHERE "id:ACCOUNT_ID")"#;

pub const TCR5: &str = r#"SELECT trace
FROM "ldbc-finbench"
MATCH trace =
      (
        (:Account)
        <-(:AccountTransferAccount WHERE "createTime:{START TO END}")
        <-(:Account)
      ) {1,3}
      (account:Account)<-(:PersonOwnAccount)<-(:Person WHERE "id:PERSON_ID")"#;

pub const TCR7: &str = r#"SELECT src.id, dst.id, edge1.amount, edge2.amount
FROM "ldbc-finbench"
MATCH (src:Account)
      ->(edge1:AccountTransferAccount WHERE "amount:{0 TO *} AND createTime:{START TO END}")
      ->(mid:Account WHERE "id:PERSON_ID")
      ->(edge2:AccountTransferAccount WHERE "amount:{0 TO *} AND createTime:{START TO END}")
      ->(dst:Account)"#;

pub const TCR9: &str = r#"SELECT edge1.amount, edge2.amount, edge3.amount, edge4.amount
FROM "ldbc-finbench"
MATCH (up:Account)
      ->(edge3:AccountTransferAccount WHERE "amount:{0 TO *} AND createTime:{START TO END}")
      ->(mid:Account WHERE "id:PERSON_ID")
      ->(edge4:AccountTransferAccount WHERE "amount:{0 TO *} AND createTime:{START TO END}")
      ->(down:Account)
      (mid)<-(edge1:LoanDepositAccount WHERE "amount:{0 TO *} AND createTime:{START TO END}")
      (mid)<-(edge2:AccountRepayLoan WHERE "amount:{0 TO *} AND createTime:{START TO END}")"#;

pub const TCR11: &str = r#"SELECT l.loanAmount
FROM "ldbc-finbench"
MATCH (l:Loan)<-(:PersonApplyLoan)<-(p2:Person)
      (
        (:Person)<-(g:PersonGuaranteePerson WHERE "createTime:{START TO END}")
        <-(:Person)
      ) {1,10}
      (p1:Person WHERE "id:PERSON_ID")"#;

pub const TCR12: &str = r#"SELECT compAcc.id, edge2.amount
FROM "ldbc-finbench"
MATCH (company:Company)
          ->(:CompanyOwnAccount)
          ->(compAcc:Account)
          <-(edge2:AccountTransferAccount WHERE "createTime:{START TO END}")
          <-(pAcc:Account)
          <-(:PersonOwnAccount)
          <-(person:Person WHERE "id:PERSON_ID")"#;

/// The evaluable queries by name.
pub const SUPPORTED: [(&str, &str); 8] =
    [("TCR1", TCR1), ("TCR2", TCR2), ("TCR3", TCR3), ("TCR5", TCR5), ("TCR7", TCR7), ("TCR9", TCR9), ("TCR11", TCR11), ("TCR12", TCR12)];

/// `(name, text, unsupported construct)`.
pub const UNSUPPORTED: [(&str, &str, &str); 5] = [
    (
        "TCR4",
        r#"SELECT src.id, dst.id
FROM "ldbc-finbench"
MATCH (src:Account WHERE "id:ACCOUNT_ID")
      ->(:AccountTransferAccount)
      ->(dst:Account)
      ->(:AccountTransferAccount WHERE "createTime:{START TO END}")
      ->(other:Account)
      ->(:AccountTransferAccount WHERE "createTime:{START TO END}")
      ->(src)"#,
        "cycle",
    ),
    (
        "TCR6",
        r#"SELECT mid.id
FROM "ldbc-finbench"
MATCH (src:Account)
      ->(e1:AccountTransferAccount WHERE "createTime:{START TO END}")
      ->(mid:Account)
      ->(e2:AccountTransferAccount WHERE "createTime:{START TO END}")
      ->(dst:Account WHERE "id:ACCOUNT_ID")
WHERE COUNT(e1) > 3"#,
        "degree_condition",
    ),
    (
        "TCR8",
        r#"SELECT dst.id
FROM "ldbc-finbench"
MATCH (loan:Loan WHERE "id:ACCOUNT_ID")
      ->(:LoanDepositAccount WHERE "createTime:{START TO END}")
      ->(src:Account)
      ->(:AccountTransferAccount|AccountRepayLoan WHERE "createTime:{START TO END}")
      ->(dst:Account)"#,
        "label_disjunction",
    ),
    (
        "TCR8-reference",
        r#"SELECT dst.id
FROM "ldbc-finbench"
MATCH (src:Account WHERE "id:ACCOUNT_ID")
      ->(e1:AccountTransferAccount WHERE "createTime:{START TO END}")
      ->(mid:Account)
      ->(e2:AccountTransferAccount WHERE "createTime:{e1.createTime TO END}")
      ->(dst:Account)"#,
        "cross_node_reference",
    ),
    (
        "TCR10",
        r#"SELECT JACCARD(a1, a2)
FROM "ldbc-finbench"
MATCH (p1:Person WHERE "id:PERSON_ID")->(:PersonOwnAccount)->(a1:Account)
      (p2:Person WHERE "id:ACCOUNT_ID")->(:PersonOwnAccount)->(a2:Account)"#,
        "function",
    ),
];
