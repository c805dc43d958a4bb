//! Indices, the prefix order on them, and antichains of indices.

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Name = Arc<str>;
pub type Pair = (Name, i64);

/// A finite sequence of (string, integer) pairs with pairwise distinct strings.
///
/// The derived ordering is lexicographic on the pair sequence. All extensions
/// of an index sort directly after it, which the map code relies on.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Index(Vec<Pair>);

impl Borrow<[Pair]> for Index {
    fn borrow(&self) -> &[Pair] {
        &self.0
    }
}

impl Index {
    pub fn empty() -> Self {
        Index(Vec::new())
    }

    pub fn new<S: Into<Name>>(pairs: impl IntoIterator<Item = (S, i64)>) -> Result<Self> {
        let mut out = Index::empty();
        for (s, k) in pairs {
            out = out.extended(s.into(), k)?;
        }
        Ok(out)
    }

    /// Builds an index from pairs already known to use distinct strings.
    pub(crate) fn from_pairs_unchecked(pairs: Vec<Pair>) -> Self {
        Index(pairs)
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn binds(&self, s: &str) -> bool {
        self.0.iter().any(|(n, _)| &**n == s)
    }

    pub fn lookup(&self, s: &str) -> Option<i64> {
        self.0.iter().find(|(n, _)| &**n == s).map(|(_, k)| *k)
    }

    /// `self ⧺ [(s, k)]`.
    pub fn extended(&self, s: Name, k: i64) -> Result<Self> {
        if self.binds(&s) {
            return Err(Error::StringAlreadyPresent {
                index: self.clone(),
                string: s.to_string(),
            });
        }
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push((s, k));
        Ok(Index(v))
    }

    /// The index without its last pair; `None` for `[]`.
    pub fn parent(&self) -> Option<Index> {
        if self.0.is_empty() {
            None
        } else {
            Some(Index(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn last(&self) -> Option<&Pair> {
        self.0.last()
    }

    pub fn prefix(&self, len: usize) -> Index {
        Index(self.0[..len].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Index) -> bool {
        is_prefix(&self.0, &other.0)
    }
}

pub(crate) fn is_prefix(a: &[Pair], b: &[Pair]) -> bool {
    a.len() <= b.len() && a.iter().zip(b).all(|(x, y)| x == y)
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (n, (s, k)) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(";")?;
            }
            write!(f, "({},{})", quote(s), k)?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Quotes a string with the escapes the parser understands.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// `i ⊑ j`.
pub fn prefix_leq(i: &Index, j: &Index) -> bool {
    i.is_prefix_of(j)
}

/// The longest member of `l` that is a prefix of `i`.
pub fn max_below<'a>(l: impl IntoIterator<Item = &'a Index>, i: &Index) -> Option<&'a Index> {
    l.into_iter()
        .filter(|j| j.is_prefix_of(i))
        .max_by_key(|j| j.len())
}

/// `i ∈ L↑`.
pub fn in_up<'a>(i: &Index, l: impl IntoIterator<Item = &'a Index>) -> bool {
    l.into_iter().any(|j| j.is_prefix_of(i))
}

/// `i ∈ L↓`.
pub fn in_down<'a>(i: &Index, l: impl IntoIterator<Item = &'a Index>) -> bool {
    l.into_iter().any(|j| i.is_prefix_of(j))
}

pub fn is_antichain<'a>(l: impl IntoIterator<Item = &'a Index>) -> bool {
    let set: BTreeSet<&Index> = l.into_iter().collect();
    set_is_antichain(&set)
}

fn set_is_antichain<I: Borrow<Index> + Ord>(set: &BTreeSet<I>) -> bool {
    // In lexicographic order an extension of j sorts before the next
    // non-extension, so comparing neighbours suffices.
    let mut prev: Option<&Index> = None;
    for i in set {
        let i = i.borrow();
        if let Some(p) = prev {
            if p.is_prefix_of(i) {
                return false;
            }
        }
        prev = Some(i);
    }
    true
}

/// A finite antichain of indices under the prefix order.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct AChain(BTreeSet<Index>);

impl AChain {
    pub fn empty() -> Self {
        AChain(BTreeSet::new())
    }

    /// `{[]}`.
    pub fn root() -> Self {
        AChain(BTreeSet::from([Index::empty()]))
    }

    pub fn new(members: impl IntoIterator<Item = Index>) -> Result<Self> {
        let set: BTreeSet<Index> = members.into_iter().collect();
        if !set_is_antichain(&set) {
            return Err(Error::Invalid("index set is not an antichain".into()));
        }
        Ok(AChain(set))
    }

    /// Builds from a subset of an existing antichain.
    pub(crate) fn from_subset(members: BTreeSet<Index>) -> Self {
        AChain(members)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Index> + '_ {
        self.0.iter()
    }

    pub fn contains(&self, i: &Index) -> bool {
        self.0.contains(i)
    }

    pub fn as_set(&self) -> &BTreeSet<Index> {
        &self.0
    }

    /// `i ∈ A↓`: some member extends `i`.
    pub fn down_contains(&self, i: &[Pair]) -> bool {
        use std::ops::Bound;
        self.0
            .range::<[Pair], _>((Bound::Included(i), Bound::Unbounded))
            .next()
            .is_some_and(|j| is_prefix(i, j.pairs()))
    }

    /// `i ∈ A↑`: some member is a prefix of `i`.
    pub fn up_contains(&self, i: &[Pair]) -> bool {
        (0..=i.len()).any(|k| self.0.contains(&i[..k]))
    }

    /// `{ i ⧺ [(s,k)] : i ∈ A, 0 ≤ k < n }`.
    pub fn extend_indices(&self, s: &Name, n: u32) -> Result<AChain> {
        let mut out = BTreeSet::new();
        for i in &self.0 {
            for k in 0..n {
                out.insert(i.extended(s.clone(), i64::from(k))?);
            }
        }
        Ok(AChain(out))
    }
}

impl fmt::Debug for AChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl<'a> IntoIterator for &'a AChain {
    type Item = &'a Index;
    type IntoIter = std::collections::btree_set::Iter<'a, Index>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Shorthand for tests and fixtures: `idx(&[("a", 0), ("b", 1)])`.
pub fn idx(pairs: &[(&str, i64)]) -> Index {
    Index::new(pairs.iter().map(|&(s, k)| (s, k))).expect("distinct strings")
}
