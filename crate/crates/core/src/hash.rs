//! Stable 128-bit content hashing over canonical JSON.
//!
//! Canonical form: object keys sorted bytewise at every level, no whitespace,
//! numbers as serde_json prints them (shortest round-trip for floats). The
//! hash is XXH3-128 of the UTF-8 bytes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ContentHash(pub u128);

impl ContentHash {
    pub fn of_bytes(bytes: &[u8]) -> Self {
        Self(xxhash_rust::xxh3::xxh3_128(bytes))
    }

    pub fn of<T: Serialize + ?Sized>(value: &T) -> Result<Self> {
        Ok(Self::of_bytes(canonical_json(&serde_json::to_value(value)?).as_bytes()))
    }

    pub fn to_le_bytes(self) -> [u8; 16] {
        self.0.to_le_bytes()
    }

    pub fn from_le_bytes(b: [u8; 16]) -> Self {
        Self(u128::from_le_bytes(b))
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl FromStr for ContentHash {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() != 32 {
            return Err(Error::InvalidArgument(format!("hash '{s}' is not 32 hex digits")));
        }
        u128::from_str_radix(s, 16)
            .map(ContentHash)
            .map_err(|e| Error::InvalidArgument(format!("hash '{s}': {e}")))
    }
}

impl Serialize for ContentHash {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ContentHash {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serialise a JSON value with recursively sorted object keys.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(v, &mut out);
    out
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn key_order_does_not_matter() {
        let a: Value = serde_json::from_str(r#"{"b": 1, "a": {"y": [1, 2], "x": 0.5}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a": {"x": 0.5, "y": [1, 2]}, "b": 1}"#).unwrap();
        assert_eq!(canonical_json(&a), r#"{"a":{"x":0.5,"y":[1,2]},"b":1}"#);
        assert_eq!(ContentHash::of(&a).unwrap(), ContentHash::of(&b).unwrap());
    }

    #[test]
    fn different_values_differ() {
        let a = ContentHash::of(&json!({"reps": 1})).unwrap();
        let b = ContentHash::of(&json!({"reps": 2})).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn hex_round_trip() {
        let h = ContentHash::of(&json!([1, 2, 3])).unwrap();
        assert_eq!(h.to_string().parse::<ContentHash>().unwrap(), h);
        assert_eq!(ContentHash::from_le_bytes(h.to_le_bytes()), h);
        assert!("xyz".parse::<ContentHash>().is_err());
    }
}
