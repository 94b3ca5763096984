// SPDX-License-Identifier: Apache-2.0

//! The Lucene-style filter subset used inside `WHERE "..."`.
//!
//! ```text
//! filter  := clause ("AND" clause)*
//! clause  := field ":" value
//!          | field ":" ("{" | "[") end "TO" end ("}" | "]")
//! end     := "*" | value
//! ```
//!
//! Values are integers, floats, `UPPER_CASE` parameters, `var.field`
//! references, or bare text.

use super::ast::{FValue, FilterAst, FilterClause, RangeEnd};
use super::QueryError;

struct Scanner {
    chars: Vec<char>,
    pos: usize,
    /// Location of the filter text inside the query, for error reporting.
    line: usize,
    col: usize,
}

impl Scanner {
    fn err(&self, msg: impl Into<String>) -> QueryError {
        QueryError::MalformedFilter { message: msg.into(), line: self.line, col: self.col + self.pos }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    /// Non-space run, stopping before any of `stop`.
    fn word(&mut self, stop: &[char]) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || stop.contains(&c) {
                break;
            }
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }
}

fn is_ident(s: &str) -> bool {
    let mut it = s.chars();
    matches!(it.next(), Some(c) if c.is_alphabetic() || c == '_') && it.all(|c| c.is_alphanumeric() || c == '_')
}

pub fn classify(word: &str) -> FValue {
    if let Ok(v) = word.parse::<i64>() {
        return FValue::Int(v);
    }
    if word.chars().any(|c| c.is_ascii_digit()) {
        if let Ok(v) = word.parse::<f64>() {
            if v.is_finite() {
                return FValue::Float(v);
            }
        }
    }
    if is_ident(word) && word.chars().next().is_some_and(|c| c.is_ascii_uppercase()) && word.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_') {
        return FValue::Param(word.to_string());
    }
    if let Some((a, b)) = word.split_once('.') {
        if is_ident(a) && is_ident(b) {
            return FValue::Ref { var: a.to_string(), field: b.to_string() };
        }
    }
    FValue::Text(word.to_string())
}

/// Parses filter text found at `line:col` of the enclosing query.
pub fn parse_filter_at(text: &str, line: usize, col: usize) -> Result<FilterAst, QueryError> {
    let mut s = Scanner { chars: text.chars().collect(), pos: 0, line, col };
    let mut clauses = Vec::new();
    loop {
        s.skip_ws();
        let field = s.word(&[':']);
        if field.is_empty() || !field.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') {
            return Err(s.err(format!("expected a field name, found `{field}`")));
        }
        if s.peek() != Some(':') {
            return Err(s.err(format!("expected `:` after `{field}`")));
        }
        s.pos += 1;
        match s.peek() {
            Some(open @ ('{' | '[')) => {
                s.pos += 1;
                s.skip_ws();
                let lo = s.word(&[]);
                s.skip_ws();
                if s.word(&[]) != "TO" {
                    return Err(s.err("expected `TO` in range"));
                }
                s.skip_ws();
                let hi = s.word(&['}', ']']);
                s.skip_ws();
                let close = match s.peek() {
                    Some(c @ ('}' | ']')) => c,
                    _ => return Err(s.err("unterminated range")),
                };
                s.pos += 1;
                let end = |w: String, inclusive: bool| -> Result<RangeEnd, QueryError> {
                    if w.is_empty() {
                        return Err(s.err("missing range endpoint"));
                    }
                    if w == "*" {
                        return Ok(RangeEnd::Star);
                    }
                    match classify(&w) {
                        FValue::Text(t) => Err(s.err(format!("range endpoint `{t}` is not numeric"))),
                        value => Ok(RangeEnd::Value { value, inclusive }),
                    }
                };
                let lo = end(lo, open == '[')?;
                let hi = end(hi, close == ']')?;
                clauses.push(FilterClause::Range { field, lo, hi });
            }
            _ => {
                let v = s.word(&[]);
                if v.is_empty() {
                    return Err(s.err(format!("missing value for `{field}`")));
                }
                if v == "*" {
                    return Err(s.err("`*` is only allowed as a range endpoint"));
                }
                clauses.push(FilterClause::Term { field, value: classify(&v) });
            }
        }
        s.skip_ws();
        if s.peek().is_none() {
            break;
        }
        if s.word(&[]) != "AND" {
            return Err(s.err("expected `AND` between clauses"));
        }
    }
    Ok(FilterAst { clauses })
}

pub fn parse_filter(text: &str) -> Result<FilterAst, QueryError> {
    parse_filter_at(text, 1, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boolean_term() {
        let f = parse_filter("isBlocked:true").unwrap();
        assert_eq!(f.clauses, vec![FilterClause::Term { field: "isBlocked".into(), value: FValue::Text("true".into()) }]);
    }

    #[test]
    fn conjunction_with_open_range() {
        let f = parse_filter("amount:{0 TO *} AND createTime:{10 TO 20}").unwrap();
        assert_eq!(f.clauses.len(), 2);
        assert_eq!(
            f.clauses[0],
            FilterClause::Range { field: "amount".into(), lo: RangeEnd::Value { value: FValue::Int(0), inclusive: false }, hi: RangeEnd::Star }
        );
        assert_eq!(f.to_string(), "amount:{0 TO *} AND createTime:{10 TO 20}");
    }

    #[test]
    fn params_refs_and_inverted_range() {
        let f = parse_filter("createTime:{START TO END} AND id:src.id").unwrap();
        assert!(matches!(&f.clauses[0], FilterClause::Range { lo: RangeEnd::Value { value: FValue::Param(p), .. }, .. } if p == "START"));
        assert_eq!(f.clauses[1], FilterClause::Term { field: "id".into(), value: FValue::Ref { var: "src".into(), field: "id".into() } });
        assert!(parse_filter("amount:{5 TO 2}").is_ok());
    }

    #[test]
    fn malformed() {
        for bad in ["amount:{1 2}", "amount:{1 TO 2", "amount:{x TO 2}", ":3", "a:1 OR b:2", "a:"] {
            let e = parse_filter(bad).unwrap_err();
            assert_eq!(e.code(), "malformed_filter", "{bad}");
        }
    }
}
