// SPDX-License-Identifier: Apache-2.0

use std::process::Command;

use docjoin_core::querylang::workload::{SUPPORTED, UNSUPPORTED};
use docjoin_harness::cli;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(std::iter::once("docjoin").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json_lines(s: &str) -> Vec<Value> {
    s.lines().map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("not JSON ({e}): {l}"))).collect()
}

#[test]
fn every_supported_listing_returns_rows() {
    for (name, text) in SUPPORTED {
        let paths = name == "TCR3" || name == "TCR5";
        let (code, out, err) = run(&[if paths { "paths" } else { "query" }, "--q", text]);
        assert_eq!(code, 0, "{name}: {err}");
        let lines = json_lines(&out);
        if paths {
            let footer = lines.last().unwrap();
            assert!(footer["length"].as_u64().unwrap() >= 1, "{name}: {footer}");
            assert!(lines.len() >= 2, "{name}: no paths");
        } else {
            assert!(!lines.is_empty(), "{name}: no rows");
        }
    }
}

#[test]
fn rejected_listings_report_the_construct() {
    for (name, text, construct) in UNSUPPORTED {
        let (code, out, _) = run(&["query", "--q", text]);
        assert_eq!(code, 1, "{name}");
        let e = &json_lines(&out)[0]["error"];
        assert_eq!(e["code"], "unsupported", "{name}: {e}");
        assert_eq!(e["construct"], construct, "{name}: {e}");
    }
}

#[test]
fn syntax_errors_carry_positions() {
    let (code, out, _) = run(&["query", "--q", "SELECT a.id FROM \"ldbc-finbench\" MATCH (a:Account"]);
    assert_eq!(code, 1);
    let e = &json_lines(&out)[0]["error"];
    assert_eq!(e["code"], "syntax");
    assert_eq!(e["line"], 1);
    assert!(e["column"].as_u64().unwrap() > 1);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["query"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["--cache", "sometimes", "stats"]).0, 2);
    assert_eq!(run(&["--data", "/definitely/not/here.jsonl", "stats"]).0, 2);
}

#[test]
fn generation_is_deterministic_per_seed() {
    let hash = |seed: &str| json_lines(&run(&["--seed", seed, "stats"]).1)[0]["content_hash"].clone();
    assert_eq!(hash("3"), hash("3"));
    assert_ne!(hash("3"), hash("4"));
}

#[test]
fn bulk_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("fin.jsonl");
    let file = file.to_str().unwrap();
    let (code, _, err) = run(&["load", "--out", file]);
    assert_eq!(code, 0, "{err}");
    let q = SUPPORTED.iter().find(|(n, _)| *n == "TCR12").unwrap().1;
    let generated = run(&["query", "--q", q]);
    let reloaded = run(&["--data", file, "query", "--q", q, "--param", "ACCOUNT_ID=2", "--param", "PERSON_ID=1", "--param", "START=300", "--param", "END=700"]);
    assert_eq!(reloaded.0, 0, "{}", reloaded.2);
    assert_eq!(generated.1, reloaded.1);
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("docjoin.conf");
    std::fs::write(&cfg, "# test cluster\nnodes = 2\ncache = bypass\nformat = table\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let (code, out, err) = run(&["--config", cfg, "--format", "json", "bench", "--queries", "TCR12", "--samples", "100"]);
    assert_eq!(code, 0, "{err}");
    let report = &json_lines(&out)[0];
    assert_eq!(report["cache_mode"], "bypass");
    assert_eq!(report["cache"]["hits"], 0);

    std::fs::write(dir.path().join("bad.conf"), "colour = blue\n").unwrap();
    let bad = dir.path().join("bad.conf");
    assert_eq!(run(&["--config", bad.to_str().unwrap(), "stats"]).0, 2);
}

#[test]
fn investigation_explain_shows_the_fold() {
    let (code, out, err) = run(&["--cache", "off", "explain", "--plan", "investigation"]);
    assert_eq!(code, 0, "{err}");
    let v = &json_lines(&out)[0];
    let groups = v["trace"]["fold"]["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0]["stages"], serde_json::json!([1, 2]));
    assert_eq!(v["trace"]["counters"]["semi_joins_computed"], 3);
}

#[test]
fn explain_flag_appends_trace_text() {
    let q = SUPPORTED.iter().find(|(n, _)| *n == "TCR7").unwrap().1;
    let (plain_code, plain, _) = run(&["query", "--q", q]);
    let (code, explained, _) = run(&["--explain", "query", "--q", q]);
    assert_eq!((plain_code, code), (0, 0));
    assert!(explained.starts_with(&plain));
    assert!(explained.len() > plain.len());
}

#[test]
fn binary_runs() {
    let out = Command::new(env!("CARGO_BIN_EXE_docjoin")).args(["--nodes", "3", "stats"]).output().unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["indices"].as_array().unwrap().len() >= 8);
    let out = Command::new(env!("CARGO_BIN_EXE_docjoin")).arg("query").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
