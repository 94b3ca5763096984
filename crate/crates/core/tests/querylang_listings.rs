// SPDX-License-Identifier: Apache-2.0

use docjoin_core::querylang::workload::{SUPPORTED, TCR12, TCR3, UNSUPPORTED};
use docjoin_core::querylang::{lower_to_plan, parse_query, Catalog, Elem, FilterClause, FValue, Lowered, Params, QueryError};

fn params() -> Params {
    [("START", "100"), ("END", "200"), ("PERSON_ID", "1"), ("ACCOUNT_ID", "2")].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn listings_round_trip() {
    for (name, text) in SUPPORTED {
        let ast = parse_query(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let rendered = ast.to_string();
        assert_eq!(parse_query(&rendered).unwrap(), ast, "{name}: {rendered}");
    }
}

#[test]
fn listings_lower() {
    let cat = Catalog::finbench_mini();
    for (name, text) in SUPPORTED {
        let lowered = lower_to_plan(&parse_query(text).unwrap(), &cat, &params()).unwrap_or_else(|e| panic!("{name}: {e}"));
        let is_paths = matches!(lowered, Lowered::Paths(_));
        assert_eq!(is_paths, name == "TCR3" || name == "TCR5", "{name}");
    }
}

#[test]
fn excluded_constructs_name_themselves() {
    let cat = Catalog::finbench_mini();
    for (name, text, construct) in UNSUPPORTED {
        let err = parse_query(text).and_then(|q| lower_to_plan(&q, &cat, &params())).unwrap_err();
        match err {
            QueryError::Unsupported(u) => assert_eq!(u.construct(), construct, "{name}"),
            other => panic!("{name}: {other}"),
        }
    }
}

#[test]
fn shortest_listing_shape() {
    let q = parse_query(TCR3).unwrap();
    assert!(q.all_shortest);
    assert_eq!(q.path_var.as_deref(), Some("trace"));
    let groups: Vec<_> = q.pattern.iter().filter_map(|e| if let Elem::Group(g) = e { Some(g) } else { None }).collect();
    assert_eq!((groups.len(), groups[0].min, groups[0].max), (1, 1, 10));
    let ends: Vec<_> = q
        .pattern
        .iter()
        .filter_map(|e| if let Elem::Node(n) = e { n.filter.clone() } else { None })
        .collect();
    assert_eq!(ends.len(), 2);
    for f in ends {
        assert_eq!(f.clauses, vec![FilterClause::Term { field: "id".into(), value: FValue::Param("ACCOUNT_ID".into()) }]);
    }
}

#[test]
fn linear_listing_shape() {
    let q = parse_query(TCR12).unwrap();
    assert!(q.pattern.iter().all(|e| !matches!(e, Elem::Group(_))));
    assert_eq!(q.pattern.iter().filter(|e| matches!(e, Elem::Node(_))).count(), 7);
}
