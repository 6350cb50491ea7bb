//! Order-preserving key encodings: for values of one type, unsigned
//! lexicographic order of the encoded bytes equals value order.
//!
//! * integers: two's complement with the sign bit flipped, big-endian;
//! * reals: sign-aware bit flip (negatives fully inverted, positives get the
//!   sign bit set), big-endian; `-0.0` is folded into `0.0` and NaN rejected;
//! * strings: raw bytes terminated by `00 00`, with embedded `00` escaped as
//!   `00 FF` so the terminator still sorts first;
//! * composites: components concatenated, each self-delimiting.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeyError {
    #[error("NaN cannot be used as a key")]
    NaN,
    #[error("{0} values cannot be used as keys")]
    Unsupported(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KeyValue {
    Int(i64),
    Real(f64),
    Str(String),
    Composite(Vec<KeyValue>),
}

impl KeyValue {
    /// Value order within one type; `None` across types or for NaN.
    pub fn compare(&self, other: &KeyValue) -> Option<Ordering> {
        match (self, other) {
            (KeyValue::Int(a), KeyValue::Int(b)) => Some(a.cmp(b)),
            (KeyValue::Real(a), KeyValue::Real(b)) => a.partial_cmp(b),
            (KeyValue::Str(a), KeyValue::Str(b)) => Some(a.as_bytes().cmp(b.as_bytes())),
            (KeyValue::Composite(a), KeyValue::Composite(b)) => {
                for (x, y) in a.iter().zip(b) {
                    match x.compare(y)? {
                        Ordering::Equal => continue,
                        o => return Some(o),
                    }
                }
                Some(a.len().cmp(&b.len()))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypedKey(pub Vec<u8>);

impl TypedKey {
    /// First eight bytes (zero padded) as a big-endian integer; monotone
    /// non-decreasing in key order.
    pub fn rank(&self) -> u64 {
        let mut buf = [0u8; 8];
        let n = self.0.len().min(8);
        buf[..n].copy_from_slice(&self.0[..n]);
        u64::from_be_bytes(buf)
    }
}

pub fn encode_key(v: &KeyValue) -> Result<TypedKey, KeyError> {
    let mut out = Vec::new();
    encode_into(v, &mut out)?;
    Ok(TypedKey(out))
}

fn encode_into(v: &KeyValue, out: &mut Vec<u8>) -> Result<(), KeyError> {
    match v {
        KeyValue::Int(i) => out.extend_from_slice(&((*i as u64) ^ (1 << 63)).to_be_bytes()),
        KeyValue::Real(f) => {
            if f.is_nan() {
                return Err(KeyError::NaN);
            }
            let f = if *f == 0.0 { 0.0 } else { *f };
            let bits = f.to_bits();
            let mapped = if bits >> 63 == 1 { !bits } else { bits | (1 << 63) };
            out.extend_from_slice(&mapped.to_be_bytes());
        }
        KeyValue::Str(s) => {
            for &b in s.as_bytes() {
                out.push(b);
                if b == 0 {
                    out.push(0xff);
                }
            }
            out.extend_from_slice(&[0, 0]);
        }
        KeyValue::Composite(parts) => {
            for p in parts {
                encode_into(p, out)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: KeyValue) -> Vec<u8> {
        encode_key(&v).unwrap().0
    }

    #[test]
    fn signed_integers() {
        assert!(k(KeyValue::Int(-1)) < k(KeyValue::Int(0)));
        assert!(k(KeyValue::Int(0)) < k(KeyValue::Int(1)));
        assert!(k(KeyValue::Int(i64::MIN)) < k(KeyValue::Int(i64::MAX)));
    }

    #[test]
    fn reals() {
        assert!(k(KeyValue::Real(-1.5)) < k(KeyValue::Real(0.0)));
        assert!(k(KeyValue::Real(0.0)) < k(KeyValue::Real(2.25)));
        assert!(k(KeyValue::Real(f64::NEG_INFINITY)) < k(KeyValue::Real(-1e300)));
        assert_eq!(k(KeyValue::Real(-0.0)), k(KeyValue::Real(0.0)));
        assert_eq!(encode_key(&KeyValue::Real(f64::NAN)), Err(KeyError::NaN));
    }

    #[test]
    fn strings() {
        assert!(k(KeyValue::Str("abc".into())) < k(KeyValue::Str("abd".into())));
        assert!(k(KeyValue::Str("ab".into())) < k(KeyValue::Str("ab\0".into())));
        assert!(k(KeyValue::Str("ab\0".into())) < k(KeyValue::Str("ab\x01".into())));
        assert!(k(KeyValue::Str("".into())) < k(KeyValue::Str("\0".into())));
    }

    #[test]
    fn composites_order_by_first_component() {
        let c = |s: &str, i| KeyValue::Composite(vec![KeyValue::Str(s.into()), KeyValue::Int(i)]);
        assert!(k(c("a", 9)) < k(c("ab", 0)));
        assert!(k(c("a", -1)) < k(c("a", 0)));
    }

    #[test]
    fn rank_is_prefix() {
        let key = encode_key(&KeyValue::Int(5)).unwrap();
        assert_eq!(key.rank(), (5u64) ^ (1 << 63));
        assert_eq!(TypedKey(vec![1]).rank(), 1u64 << 56);
    }
}
