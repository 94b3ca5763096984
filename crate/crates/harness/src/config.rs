// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` settings files. Keys are the long CLI flag names
//! without dashes; `#` starts a comment. Flags given on the command line
//! win over the file.

use std::collections::BTreeMap;

pub const KEYS: [&str; 10] = ["nodes", "shards", "workers", "seed", "cache", "planner", "explain", "format", "dataset", "data"];

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(format!("line {}: unknown key `{k}`", i + 1));
        }
        if v.is_empty() {
            return Err(format!("line {}: `{k}` has no value", i + 1));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("line {}: `{k}` set twice", i + 1));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = parse_config("# cluster\nnodes = 6\nplanner=static # inline\n\n").unwrap();
        assert_eq!(c["nodes"], "6");
        assert_eq!(c["planner"], "static");
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("nodes").is_err());
        assert!(parse_config("nodes = 1\nnodes = 2").is_err());
    }
}
