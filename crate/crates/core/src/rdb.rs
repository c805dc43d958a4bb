//! Random databases: total maps from indices to reals.
//!
//! Lookups not covered by an explicit entry fall back to a default policy.
//! The seeded-normal policy is a fixed recipe so other implementations can
//! reproduce it:
//!
//! 1. Serialise the index as: pair count (u64 LE), then per pair the UTF-8
//!    byte length of the string (u64 LE), the bytes, and the integer (i64 LE).
//! 2. Hash the bytes with 64-bit FNV-1a.
//! 3. `a = splitmix64(hash ^ seed)`, `b = splitmix64(a)`.
//! 4. `u1 = 1 − (a >> 11)·2⁻⁵³`, `u2 = (b >> 11)·2⁻⁵³`.
//! 5. Return `sqrt(−2 ln u1) · cos(2π u2)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{Index, Pair};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fallback {
    Const(f64),
    Normal { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rdb {
    entries: BTreeMap<Index, f64>,
    fallback: Fallback,
}

impl Default for Rdb {
    fn default() -> Self {
        Rdb::constant(0.0)
    }
}

impl Rdb {
    pub fn constant(c: f64) -> Self {
        Rdb {
            entries: BTreeMap::new(),
            fallback: Fallback::Const(c),
        }
    }

    pub fn normal(seed: u64) -> Self {
        Rdb {
            entries: BTreeMap::new(),
            fallback: Fallback::Normal { seed },
        }
    }

    pub fn with_entry(mut self, i: Index, v: f64) -> Self {
        self.entries.insert(i, v);
        self
    }

    pub fn insert(&mut self, i: Index, v: f64) {
        self.entries.insert(i, v);
    }

    pub fn fallback(&self) -> Fallback {
        self.fallback
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Index, f64)> + '_ {
        self.entries.iter().map(|(i, v)| (i, *v))
    }

    pub fn lookup(&self, i: &Index) -> f64 {
        if let Some(v) = self.entries.get(i) {
            return *v;
        }
        match self.fallback {
            Fallback::Const(c) => c,
            Fallback::Normal { seed } => hashed_normal(i.pairs(), seed),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RdbFile::from(self)).expect("serialisable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: RdbFile = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("database file: {e}")))?;
        f.try_into()
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Canonical byte encoding of an index.
pub fn index_bytes(i: &[Pair]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(i.len() as u64).to_le_bytes());
    for (s, k) in i {
        out.extend_from_slice(&(s.len() as u64).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
        out.extend_from_slice(&k.to_le_bytes());
    }
    out
}

pub fn hashed_normal(i: &[Pair], seed: u64) -> f64 {
    let a = splitmix64(fnv1a(&index_bytes(i)) ^ seed);
    let b = splitmix64(a);
    let unit = |x: u64| (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let u1 = 1.0 - unit(a);
    let u2 = unit(b);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DefaultSpec {
    Const { value: f64 },
    Normal { seed: u64 },
}

#[derive(Serialize, Deserialize)]
struct EntrySpec {
    index: Vec<(String, i64)>,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct RdbFile {
    default: DefaultSpec,
    #[serde(default)]
    entries: Vec<EntrySpec>,
}

impl From<&Rdb> for RdbFile {
    fn from(d: &Rdb) -> Self {
        RdbFile {
            default: match d.fallback {
                Fallback::Const(value) => DefaultSpec::Const { value },
                Fallback::Normal { seed } => DefaultSpec::Normal { seed },
            },
            entries: d
                .entries
                .iter()
                .map(|(i, v)| EntrySpec {
                    index: i.pairs().iter().map(|(s, k)| (s.to_string(), *k)).collect(),
                    value: *v,
                })
                .collect(),
        }
    }
}

impl TryFrom<RdbFile> for Rdb {
    type Error = Error;
    fn try_from(f: RdbFile) -> Result<Self> {
        let mut d = match f.default {
            DefaultSpec::Const { value } => Rdb::constant(value),
            DefaultSpec::Normal { seed } => Rdb::normal(seed),
        };
        for e in f.entries {
            d.insert(Index::new(e.index)?, e.value);
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::idx;

    #[test]
    fn explicit_and_default() {
        let d = Rdb::constant(0.0).with_entry(idx(&[("z", 0)]), 0.1);
        assert_eq!(d.lookup(&idx(&[("z", 0)])), 0.1);
        assert_eq!(d.lookup(&idx(&[("z", 1)])), 0.0);
    }

    #[test]
    fn seeded_default_is_deterministic() {
        let d = Rdb::normal(7);
        let i = idx(&[("z", 3), ("w", -1)]);
        assert_eq!(d.lookup(&i).to_bits(), d.lookup(&i).to_bits());
        assert_ne!(d.lookup(&i), Rdb::normal(8).lookup(&i));
        assert!(d.lookup(&i).is_finite());
    }

    #[test]
    fn recipe_reference_values() {
        // FNV-1a reference vectors.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        // splitmix64 first output from state 0.
        assert_eq!(splitmix64(0), 0xe220a8397b1dcdaf);
    }

    #[test]
    fn normal_deviates_look_standard() {
        let d = Rdb::normal(1);
        let xs: Vec<f64> = (0..20_000).map(|k| d.lookup(&idx(&[("z", k)]))).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03, "{mean}");
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn json_round_trip() {
        let d = Rdb::normal(3).with_entry(idx(&[("z", 0)]), 0.1);
        let text = d.to_json();
        assert!(text.contains("\"kind\": \"normal\""));
        assert_eq!(Rdb::from_json(&text).unwrap(), d);
        let c = Rdb::from_json(r#"{"default":{"kind":"const","value":0.0},"entries":[{"index":[["z",0]],"value":0.1}]}"#)
            .unwrap();
        assert_eq!(c.lookup(&idx(&[("z", 0)])), 0.1);
    }
}
