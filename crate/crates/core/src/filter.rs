// SPDX-License-Identifier: Apache-2.0

//! Exact-term and numeric-range filters over a single index.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::Key;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    Unbounded,
    Inclusive(f64),
    Exclusive(f64),
}

impl Bound {
    fn admits_above(&self, v: f64) -> bool {
        match *self {
            Bound::Unbounded => true,
            Bound::Inclusive(lo) => v >= lo,
            Bound::Exclusive(lo) => v > lo,
        }
    }

    fn admits_below(&self, v: f64) -> bool {
        match *self {
            Bound::Unbounded => true,
            Bound::Inclusive(hi) => v <= hi,
            Bound::Exclusive(hi) => v < hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Clause {
    Term { field: String, value: Key },
    Range { field: String, lo: Bound, hi: Bound },
}

impl Clause {
    pub fn term(field: &str, value: impl Into<crate::value::Scalar>) -> Self {
        Clause::Term { field: field.to_string(), value: Key::from(&value.into()) }
    }

    pub fn range(field: &str, lo: Bound, hi: Bound) -> Self {
        Clause::Range { field: field.to_string(), lo, hi }
    }

    pub fn field(&self) -> &str {
        match self {
            Clause::Term { field, .. } | Clause::Range { field, .. } => field,
        }
    }

    /// True when the numeric interval admits no value at all.
    pub fn is_empty_range(&self) -> bool {
        match self {
            Clause::Range { lo, hi, .. } => {
                let l = match lo {
                    Bound::Unbounded => return false,
                    Bound::Inclusive(v) | Bound::Exclusive(v) => *v,
                };
                let h = match hi {
                    Bound::Unbounded => return false,
                    Bound::Inclusive(v) | Bound::Exclusive(v) => *v,
                };
                l > h || (l == h && !(matches!(lo, Bound::Inclusive(_)) && matches!(hi, Bound::Inclusive(_))))
            }
            Clause::Term { .. } => false,
        }
    }

    pub fn range_admits(&self, v: f64) -> bool {
        match self {
            Clause::Range { lo, hi, .. } => lo.admits_above(v) && hi.admits_below(v),
            Clause::Term { .. } => false,
        }
    }

    fn canonical(&self) -> String {
        match self {
            Clause::Term { field, value } => format!("{field}={}", key_repr(value)),
            Clause::Range { field, .. } if self.is_empty_range() => format!("{field}:EMPTY"),
            Clause::Range { field, lo, hi } => {
                let lo = match lo {
                    Bound::Unbounded => "(*".to_string(),
                    Bound::Inclusive(v) => format!("[{v:?}"),
                    Bound::Exclusive(v) => format!("({v:?}"),
                };
                let hi = match hi {
                    Bound::Unbounded => "*)".to_string(),
                    Bound::Inclusive(v) => format!("{v:?}]"),
                    Bound::Exclusive(v) => format!("{v:?})"),
                };
                format!("{field}:{lo},{hi}")
            }
        }
    }
}

fn key_repr(k: &Key) -> String {
    match k {
        Key::Int(v) => format!("i{v}"),
        Key::Float(bits) => format!("f{:?}", f64::from_bits(*bits)),
        Key::Text(s) => format!("s{s:?}"),
    }
}

/// Conjunction of clauses. The empty filter matches every document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    clauses: Vec<Clause>,
}

impl Filter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn new(clauses: Vec<Clause>) -> Self {
        Self { clauses }
    }

    pub fn term(field: &str, value: impl Into<crate::value::Scalar>) -> Self {
        Self::new(vec![Clause::term(field, value)])
    }

    pub fn and(mut self, clause: Clause) -> Self {
        self.clauses.push(clause);
        self
    }

    pub fn and_filter(mut self, other: &Filter) -> Self {
        self.clauses.extend(other.clauses.iter().cloned());
        self
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn is_match_all(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Order-insensitive canonical text: clauses rendered, sorted and
    /// deduplicated; unbounded ends lose their inclusivity; empty
    /// intervals collapse to a single `EMPTY` marker.
    pub fn canonical(&self) -> String {
        if self.clauses.is_empty() {
            return "*".to_string();
        }
        let mut parts: Vec<String> = self.clauses.iter().map(Clause::canonical).collect();
        parts.sort();
        parts.dedup();
        parts.join("&")
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_ignores_clause_order() {
        let a = Filter::term("x", 1).and(Clause::range("t", Bound::Exclusive(1.0), Bound::Unbounded));
        let b = Filter::new(vec![
            Clause::range("t", Bound::Exclusive(1.0), Bound::Unbounded),
            Clause::term("x", 1),
        ]);
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn empty_intervals_normalize() {
        let a = Clause::range("a", Bound::Exclusive(5.0), Bound::Exclusive(2.0));
        let b = Clause::range("a", Bound::Inclusive(3.0), Bound::Exclusive(3.0));
        assert!(a.is_empty_range() && b.is_empty_range());
        assert_eq!(Filter::new(vec![a]).canonical(), Filter::new(vec![b]).canonical());
        assert!(!Clause::range("a", Bound::Inclusive(3.0), Bound::Inclusive(3.0)).is_empty_range());
    }

    #[test]
    fn exclusive_bounds() {
        let c = Clause::range("createTime", Bound::Exclusive(10.0), Bound::Exclusive(20.0));
        assert!(!c.range_admits(10.0));
        assert!(c.range_admits(15.0));
        assert!(!c.range_admits(20.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn bound() -> impl Strategy<Value = Bound> {
            prop_oneof![
                Just(Bound::Unbounded),
                (-4i32..4).prop_map(|v| Bound::Inclusive(v as f64 / 2.0)),
                (-4i32..4).prop_map(|v| Bound::Exclusive(v as f64 / 2.0)),
            ]
        }

        proptest! {
            // bounds sit on a half-step grid, so quarter steps probe every gap
            #[test]
            fn empty_range_admits_nothing(lo in bound(), hi in bound()) {
                let c = Clause::range("x", lo, hi);
                let admitted = (-20..=20).any(|q| c.range_admits(q as f64 / 4.0));
                prop_assert_eq!(c.is_empty_range(), !admitted);
            }

            #[test]
            fn canonical_is_order_free(spec in proptest::collection::vec((bound(), bound(), 0i64..3, any::<bool>()), 0..6), rot in 0usize..6) {
                let clauses: Vec<Clause> = spec
                    .iter()
                    .enumerate()
                    .map(|(i, (lo, hi, t, range))| if *range { Clause::range(&format!("f{i}"), *lo, *hi) } else { Clause::term(&format!("f{i}"), *t) })
                    .collect();
                let mut shuffled = clauses.clone();
                shuffled.reverse();
                if !shuffled.is_empty() {
                    let r = rot % shuffled.len();
                    shuffled.rotate_left(r);
                }
                prop_assert_eq!(Filter::new(clauses).canonical(), Filter::new(shuffled).canonical());
            }
        }
    }
}
