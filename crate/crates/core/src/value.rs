// SPDX-License-Identifier: Apache-2.0

//! Field values, join keys and schema-free documents.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A single scalar stored in a document field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Scalar {
    pub fn is_numeric(&self) -> bool {
        !matches!(self, Scalar::Text(_))
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Scalar::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Int(v) => Some(*v as f64),
            Scalar::Float(v) => Some(*v),
            Scalar::Text(_) => None,
        }
    }

    /// Bytes charged by the exchange layer for shipping this value.
    pub fn encoded_len(&self) -> u64 {
        match self {
            Scalar::Int(_) | Scalar::Float(_) => 8,
            Scalar::Text(s) => s.len() as u64,
        }
    }

    pub fn key(&self) -> Key {
        Key::from(self)
    }

    /// Compares two scalars. Text against numeric is a type error.
    pub fn try_cmp(&self, other: &Scalar) -> Result<Ordering, ValueTypeError> {
        match (self, other) {
            (Scalar::Text(a), Scalar::Text(b)) => Ok(a.cmp(b)),
            (Scalar::Text(_), _) | (_, Scalar::Text(_)) => Err(ValueTypeError),
            (a, b) => {
                let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
                Ok(a.total_cmp(&b))
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Float(v) => write!(f, "{v}"),
            Scalar::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Text(v.to_string())
    }
}

impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Text(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("text and numeric values are not comparable")]
pub struct ValueTypeError;

/// The values of one field in one document. Multi-valued fields keep
/// insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldValue {
    One(Scalar),
    Many(Vec<Scalar>),
}

impl FieldValue {
    pub fn values(&self) -> &[Scalar] {
        match self {
            FieldValue::One(v) => std::slice::from_ref(v),
            FieldValue::Many(vs) => vs,
        }
    }

    pub fn first(&self) -> Option<&Scalar> {
        self.values().first()
    }

    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    pub fn encoded_len(&self) -> u64 {
        self.values().iter().map(Scalar::encoded_len).sum()
    }
}

impl<T: Into<Scalar>> From<T> for FieldValue {
    fn from(v: T) -> Self {
        FieldValue::One(v.into())
    }
}

impl<T: Into<Scalar>> FromIterator<T> for FieldValue {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        FieldValue::Many(iter.into_iter().map(Into::into).collect())
    }
}

/// Hashable, totally ordered form of a scalar used for equality joins and
/// the term dictionary. Integral floats collapse onto the integer key so
/// `1` and `1.0` join.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Key {
    Int(i64),
    Float(u64),
    Text(String),
}

impl Key {
    pub fn is_numeric(&self) -> bool {
        !matches!(self, Key::Text(_))
    }

    pub fn encoded_len(&self) -> u64 {
        match self {
            Key::Int(_) | Key::Float(_) => 8,
            Key::Text(s) => s.len() as u64,
        }
    }

    pub fn to_scalar(&self) -> Scalar {
        match self {
            Key::Int(v) => Scalar::Int(*v),
            Key::Float(bits) => Scalar::Float(f64::from_bits(*bits)),
            Key::Text(s) => Scalar::Text(s.clone()),
        }
    }

    /// Stable 64-bit FNV-1a hash; identical across runs and platforms.
    pub fn stable_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(PRIME);
            }
        };
        match self {
            Key::Int(v) => {
                feed(&[1]);
                feed(&v.to_le_bytes());
            }
            Key::Float(bits) => {
                feed(&[2]);
                feed(&bits.to_le_bytes());
            }
            Key::Text(s) => {
                feed(&[3]);
                feed(s.as_bytes());
            }
        }
        // final avalanche so that `mod n` on small n is well spread
        let mut x = h;
        x ^= x >> 33;
        x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
        x ^= x >> 33;
        x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
        x ^ (x >> 33)
    }
}

impl From<&Scalar> for Key {
    fn from(s: &Scalar) -> Self {
        match s {
            Scalar::Int(v) => Key::Int(*v),
            Scalar::Float(v) => {
                if v.fract() == 0.0 && v.is_finite() && v.abs() < 9.0e15 {
                    Key::Int(*v as i64)
                } else if *v == 0.0 {
                    Key::Int(0)
                } else {
                    Key::Float(v.to_bits())
                }
            }
            Scalar::Text(s) => Key::Text(s.clone()),
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_scalar().fmt(f)
    }
}

/// A schema-free document: field name to values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Document {
    fields: BTreeMap<String, FieldValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("field names must be nonempty")]
pub struct EmptyFieldName;

impl Document {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder-style insert.
    ///
    /// # Panics
    /// On an empty field name; use [`Document::try_insert`] for untrusted input.
    pub fn with(mut self, field: &str, value: impl Into<FieldValue>) -> Self {
        self.try_insert(field, value.into()).expect("empty field name");
        self
    }

    pub fn try_insert(&mut self, field: &str, value: FieldValue) -> Result<(), EmptyFieldName> {
        if field.is_empty() {
            return Err(EmptyFieldName);
        }
        self.fields.insert(field.to_string(), value);
        Ok(())
    }

    pub fn get(&self, field: &str) -> Option<&FieldValue> {
        self.fields.get(field)
    }

    pub fn fields(&self) -> impl Iterator<Item = (&str, &FieldValue)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Copy holding only the named fields that are present.
    pub fn project(&self, names: &[String]) -> Document {
        let fields = names
            .iter()
            .filter_map(|n| self.fields.get(n).map(|v| (n.clone(), v.clone())))
            .collect();
        Document { fields }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_float_joins_with_int() {
        assert_eq!(Key::from(&Scalar::Float(3.0)), Key::Int(3));
        assert_ne!(Key::from(&Scalar::Float(3.5)), Key::Int(3));
        assert_eq!(Key::from(&Scalar::Float(-0.0)), Key::Int(0));
    }

    #[test]
    fn text_numeric_compare_is_type_error() {
        assert_eq!(Scalar::from("a").try_cmp(&Scalar::Int(1)), Err(ValueTypeError));
        assert_eq!(Scalar::Int(1).try_cmp(&Scalar::Float(1.5)), Ok(Ordering::Less));
    }

    #[test]
    fn multi_value_preserves_order() {
        let v: FieldValue = ["+2", "+1"].into_iter().collect();
        assert_eq!(v.values(), &[Scalar::from("+2"), Scalar::from("+1")]);
    }

    #[test]
    fn empty_field_name_rejected() {
        let mut d = Document::new();
        assert!(d.try_insert("", 1.into()).is_err());
        assert!(d.is_empty());
    }

    #[test]
    fn stable_hash_is_fixed() {
        // frozen: routing must not change between releases
        // values from an independent FNV-1a + fmix64 computation
        assert_eq!(Key::Int(1).stable_hash(), 0xfead_53f7_dfca_be65);
        assert_eq!(Key::Int(-7).stable_hash(), 0xbcb8_aea1_2cc0_b7cc);
        assert_eq!(Key::Text("k0".into()).stable_hash(), 0x720d_0673_8eed_3d7e);
        assert_eq!(Key::Float(2.5f64.to_bits()).stable_hash(), 0x17e7_dd02_b88f_1f1f);
        assert_ne!(Key::Int(1).stable_hash(), Key::Text("1".into()).stable_hash());
    }
}
