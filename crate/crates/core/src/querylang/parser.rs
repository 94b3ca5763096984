// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use super::ast::{CmpOp, CountCondition, Dir, Elem, GroupPat, NodePat, Query, SelectItem};
use super::filter::parse_filter_at;
use super::lexer::{lex, Tok, Token};
use super::QueryError;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Position reported at end of input.
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.col))
    }

    fn err(&self, msg: impl Into<String>) -> QueryError {
        let (l, c) = self.here();
        QueryError::syntax(msg, l, c)
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(t) => format!("{t:?}"),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), QueryError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}, found {}", self.describe())))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        match self.peek() {
            Some(Tok::Kw(k)) if *k == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected {kw}, found {}", self.describe()))),
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Kw(k)) if *k == kw)
    }

    fn ident(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}, found {}", self.describe()))),
        }
    }

    fn int(&mut self) -> Result<i64, QueryError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err(format!("expected an integer, found {}", self.describe()))),
        }
    }

    fn select_item(&mut self) -> Result<SelectItem, QueryError> {
        let name = self.ident("a variable")?;
        match self.peek() {
            Some(Tok::Dot) => {
                self.pos += 1;
                let field = self.ident("a field name")?;
                Ok(SelectItem::Ref { var: name, field: Some(field) })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let mut args = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    args.push(self.select_item()?);
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.select_item()?);
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(SelectItem::Call { name, args })
            }
            _ => Ok(SelectItem::Ref { var: name, field: None }),
        }
    }

    fn node(&mut self) -> Result<NodePat, QueryError> {
        self.expect(Tok::LParen, "`(`")?;
        let var = match self.peek() {
            Some(Tok::Ident(_)) => Some(self.ident("a variable")?),
            _ => None,
        };
        let mut labels = Vec::new();
        if self.peek() == Some(&Tok::Colon) {
            self.pos += 1;
            labels.push(self.ident("a label")?);
            while self.peek() == Some(&Tok::Pipe) {
                self.pos += 1;
                labels.push(self.ident("a label")?);
            }
        }
        let mut filter = None;
        if self.at_kw("WHERE") {
            self.pos += 1;
            let (line, col) = self.here();
            match self.peek() {
                Some(Tok::Str(s)) => {
                    let s = s.clone();
                    self.pos += 1;
                    filter = Some(parse_filter_at(&s, line, col + 1)?);
                }
                _ => return Err(self.err(format!("expected a quoted filter, found {}", self.describe()))),
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(NodePat { var, labels, filter })
    }

    fn elems(&mut self, nested: bool) -> Result<Vec<Elem>, QueryError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Right) => {
                    self.pos += 1;
                    out.push(Elem::Arrow(Dir::Right));
                }
                Some(Tok::Left) => {
                    self.pos += 1;
                    out.push(Elem::Arrow(Dir::Left));
                }
                Some(Tok::LParen) if self.peek2() == Some(&Tok::LParen) => {
                    let (line, col) = self.here();
                    self.pos += 1;
                    let elems = self.elems(true)?;
                    self.expect(Tok::RParen, "`)` closing the group")?;
                    self.expect(Tok::LBrace, "a `{m,n}` quantifier")?;
                    let min = self.int()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let max = self.int()?;
                    self.expect(Tok::RBrace, "`}`")?;
                    if min < 1 || min > max {
                        return Err(QueryError::InvalidQuantifier { min, max, line, col });
                    }
                    out.push(Elem::Group(GroupPat { elems, min: min as usize, max: max as usize }));
                }
                Some(Tok::LParen) => out.push(Elem::Node(self.node()?)),
                _ => break,
            }
        }
        if out.is_empty() {
            return Err(self.err(format!("expected a pattern, found {}", self.describe())));
        }
        check_arrows(&out, nested).map_err(|m| self.err(m))?;
        Ok(out)
    }
}

/// Arrows sit between two node patterns.
fn check_arrows(elems: &[Elem], nested: bool) -> Result<(), String> {
    let where_ = if nested { "group" } else { "pattern" };
    for (i, e) in elems.iter().enumerate() {
        if matches!(e, Elem::Arrow(_)) {
            let before = i.checked_sub(1).map(|j| &elems[j]);
            let after = elems.get(i + 1);
            if !matches!(before, Some(Elem::Node(_))) || !matches!(after, Some(Elem::Node(_))) {
                return Err(format!("an arrow in the {where_} must connect two node patterns"));
            }
        }
    }
    if nested && !matches!(elems.first(), Some(Elem::Node(_))) {
        return Err("a group must start with a node pattern".into());
    }
    Ok(())
}

fn bound_vars(elems: &[Elem], out: &mut BTreeSet<String>) {
    for e in elems {
        match e {
            Elem::Node(n) => {
                if let Some(v) = &n.var {
                    out.insert(v.clone());
                }
            }
            Elem::Group(g) => bound_vars(&g.elems, out),
            Elem::Arrow(_) => {}
        }
    }
}

fn check_select(item: &SelectItem, bound: &BTreeSet<String>) -> Result<(), QueryError> {
    match item {
        SelectItem::Ref { var, .. } if !bound.contains(var) => Err(QueryError::UnboundVariable { var: var.clone() }),
        SelectItem::Ref { .. } => Ok(()),
        SelectItem::Call { args, .. } => args.iter().try_for_each(|a| check_select(a, bound)),
    }
}

/// ```text
/// query     := "SELECT" item ("," item)* "FROM" string "MATCH"
///              [ident "="] ["ALL" "SHORTEST"] elem+
///              ["WHERE" "COUNT" "(" ident ")" cmp int]
/// item      := ident ["." ident] | ident "(" [item ("," item)*] ")"
/// elem      := node | "->" | "<-" | "(" elem+ ")" "{" int "," int "}"
/// node      := "(" [ident] [":" ident ("|" ident)*] ["WHERE" string] ")"
/// cmp       := ">" | ">=" | "<" | "<=" | "="
/// ```
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let toks = lex(text)?;
    let end = text.lines().enumerate().last().map_or((1, 1), |(i, l)| (i + 1, l.chars().count() + 1));
    let mut p = Parser { toks, pos: 0, end };
    p.keyword("SELECT")?;
    let mut select = vec![p.select_item()?];
    while p.peek() == Some(&Tok::Comma) {
        p.pos += 1;
        select.push(p.select_item()?);
    }
    p.keyword("FROM")?;
    let from = match p.peek() {
        Some(Tok::Str(s)) => s.clone(),
        _ => return Err(p.err(format!("expected a quoted catalog name, found {}", p.describe()))),
    };
    p.pos += 1;
    p.keyword("MATCH")?;
    let mut path_var = None;
    if matches!(p.peek(), Some(Tok::Ident(_))) && p.peek2() == Some(&Tok::Eq) {
        path_var = Some(p.ident("a path variable")?);
        p.pos += 1;
    }
    let mut all_shortest = false;
    if p.at_kw("ALL") {
        p.pos += 1;
        p.keyword("SHORTEST")?;
        all_shortest = true;
    }
    let pattern = p.elems(false)?;
    let mut condition = None;
    if p.at_kw("WHERE") {
        p.pos += 1;
        p.keyword("COUNT")?;
        p.expect(Tok::LParen, "`(`")?;
        let var = p.ident("a variable")?;
        p.expect(Tok::RParen, "`)`")?;
        let op = match p.peek() {
            Some(Tok::Gt) => CmpOp::Gt,
            Some(Tok::Ge) => CmpOp::Ge,
            Some(Tok::Lt) => CmpOp::Lt,
            Some(Tok::Le) => CmpOp::Le,
            Some(Tok::Eq) => CmpOp::Eq,
            _ => return Err(p.err(format!("expected a comparison, found {}", p.describe()))),
        };
        p.pos += 1;
        let value = p.int()?;
        condition = Some(CountCondition { var, op, value });
    }
    if p.peek().is_some() {
        return Err(p.err(format!("unexpected {} after the pattern", p.describe())));
    }
    let mut bound = BTreeSet::new();
    bound_vars(&pattern, &mut bound);
    if let Some(v) = &path_var {
        bound.insert(v.clone());
    }
    for s in &select {
        check_select(s, &bound)?;
    }
    if let Some(c) = &condition {
        if !bound.contains(&c.var) {
            return Err(QueryError::UnboundVariable { var: c.var.clone() });
        }
    }
    Ok(Query { select, from, path_var, all_shortest, pattern, condition })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbound_select_variable() {
        let e = parse_query("SELECT a.x FROM \"g\" MATCH (b:T)").unwrap_err();
        assert_eq!(e, QueryError::UnboundVariable { var: "a".into() });
    }

    #[test]
    fn bad_quantifiers() {
        for q in ["((a:T)->(:E)->(:T)){0,3}", "((a:T)->(:E)->(:T)){4,3}"] {
            let e = parse_query(&format!("SELECT a FROM \"g\" MATCH (x:T) {q}")).unwrap_err();
            assert_eq!(e.code(), "invalid_quantifier");
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_query("SELECT a FROM \"g\"\nMATCH (a:T)->").unwrap_err();
        assert_eq!(e.code(), "syntax");
        assert_eq!(e.position().map(|p| p.0), Some(2));
        assert!(parse_query("select a FROM \"g\" MATCH (a:T)").is_err());
        assert!(parse_query("SELECT a FROM \"g\" MATCH (a:T) extra").is_err());
    }

    #[test]
    fn count_condition_and_call() {
        let q = parse_query("SELECT JACCARD(a, b) FROM \"g\" MATCH (a:T)->(e:E)->(b:T) WHERE COUNT(e) > 3").unwrap();
        assert!(matches!(q.select[0], SelectItem::Call { .. }));
        assert_eq!(q.condition.as_ref().unwrap().value, 3);
        assert_eq!(parse_query(&q.to_string()).unwrap(), q);
    }
}
