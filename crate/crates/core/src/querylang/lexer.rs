// SPDX-License-Identifier: Apache-2.0

use super::QueryError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Reserved word; uppercase only.
    Kw(&'static str),
    Ident(String),
    Str(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Colon,
    Pipe,
    Eq,
    /// `->`
    Right,
    /// `<-`
    Left,
    Gt,
    Ge,
    Lt,
    Le,
}

pub const KEYWORDS: [&str; 7] = ["SELECT", "FROM", "MATCH", "WHERE", "ALL", "SHORTEST", "COUNT"];

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn lex(text: &str) -> Result<Vec<Token>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let bump = |i: &mut usize, line: &mut usize, col: &mut usize| {
        if chars[*i] == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c.is_whitespace() {
            bump(&mut i, &mut line, &mut col);
            continue;
        }
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: l0, col: c0 });
        let next = chars.get(i + 1).copied();
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            ':' => Some(Tok::Colon),
            '|' => Some(Tok::Pipe),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(t) = simple {
            push(&mut out, t);
            bump(&mut i, &mut line, &mut col);
            continue;
        }
        let two = match (c, next) {
            ('-', Some('>')) => Some(Tok::Right),
            ('<', Some('-')) => Some(Tok::Left),
            ('>', Some('=')) => Some(Tok::Ge),
            ('<', Some('=')) => Some(Tok::Le),
            _ => None,
        };
        if let Some(t) = two {
            push(&mut out, t);
            bump(&mut i, &mut line, &mut col);
            bump(&mut i, &mut line, &mut col);
            continue;
        }
        match c {
            '>' => {
                push(&mut out, Tok::Gt);
                bump(&mut i, &mut line, &mut col);
            }
            '<' => {
                push(&mut out, Tok::Lt);
                bump(&mut i, &mut line, &mut col);
            }
            '"' => {
                bump(&mut i, &mut line, &mut col);
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(QueryError::syntax("unterminated string", l0, c0)),
                        Some('"') => {
                            bump(&mut i, &mut line, &mut col);
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            bump(&mut i, &mut line, &mut col);
                        }
                    }
                }
                push(&mut out, Tok::Str(s));
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    bump(&mut i, &mut line, &mut col);
                }
                let v = s.parse().map_err(|_| QueryError::syntax(format!("integer `{s}` out of range"), l0, c0))?;
                push(&mut out, Tok::Int(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    s.push(chars[i]);
                    bump(&mut i, &mut line, &mut col);
                }
                match KEYWORDS.iter().find(|k| **k == s) {
                    Some(k) => push(&mut out, Tok::Kw(k)),
                    None => push(&mut out, Tok::Ident(s)),
                }
            }
            other => return Err(QueryError::syntax(format!("unexpected character `{other}`"), l0, c0)),
        }
    }
    Ok(out)
}
