//! Finite partial maps from indices, read through `extend`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Bound;

use crate::error::{Error, Result};
use crate::index::{AChain, Index, Pair};

/// Values stored in maps. `same` is the equality used by fixed-point checks;
/// for reals it compares bit patterns.
pub trait Scalar: Copy + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn same(self, other: Self) -> bool;
}

impl Scalar for i64 {
    fn zero() -> Self {
        0
    }
    fn same(self, other: Self) -> bool {
        self == other
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn same(self, other: Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}

impl Scalar for u8 {
    fn zero() -> Self {
        0
    }
    fn same(self, other: Self) -> bool {
        self == other
    }
}

#[derive(Clone, Default)]
pub struct PMap<V> {
    entries: BTreeMap<Index, V>,
}

pub type Tensor = PMap<f64>;

impl<V: Scalar> PMap<V> {
    pub fn new() -> Self {
        PMap {
            entries: BTreeMap::new(),
        }
    }

    /// `{[] ↦ v}`.
    pub fn constant(v: V) -> Self {
        let mut m = Self::new();
        m.entries.insert(Index::empty(), v);
        m
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (Index, V)>) -> Self {
        PMap {
            entries: entries.into_iter().collect(),
        }
    }

    /// `[i ↦ f(i) : i ∈ A]`.
    pub fn tabulate(a: &AChain, mut f: impl FnMut(&Index) -> V) -> Self {
        Self::from_entries(a.iter().map(|i| (i.clone(), f(i))))
    }

    pub fn try_tabulate(a: &AChain, mut f: impl FnMut(&Index) -> Result<V>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for i in a {
            entries.insert(i.clone(), f(i)?);
        }
        Ok(PMap { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: &[Pair]) -> Option<V> {
        self.entries.get(i).copied()
    }

    pub fn contains(&self, i: &[Pair]) -> bool {
        self.entries.contains_key(i)
    }

    pub fn insert(&mut self, i: Index, v: V) {
        self.entries.insert(i, v);
    }

    pub fn remove(&mut self, i: &[Pair]) -> Option<V> {
        self.entries.remove(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Index, V)> + '_ {
        self.entries.iter().map(|(i, v)| (i, *v))
    }

    pub fn domain(&self) -> impl Iterator<Item = &Index> + '_ {
        self.entries.keys()
    }

    /// `m(max(dom(m) ∩ i↓))`, or `None` when no prefix of `i` is defined.
    pub fn extend(&self, i: &[Pair]) -> Option<V> {
        (0..=i.len()).rev().find_map(|k| self.entries.get(&i[..k]).copied())
    }

    /// `extend` over strict prefixes only.
    fn extend_strict(&self, i: &[Pair]) -> Option<V> {
        (0..i.len()).rev().find_map(|k| self.entries.get(&i[..k]).copied())
    }

    /// Removes every entry at a strict extension of `i`.
    fn clear_above(&mut self, i: &Index) {
        let doomed: Vec<Index> = self
            .entries
            .range::<Index, _>((Bound::Excluded(i), Bound::Unbounded))
            .take_while(|(j, _)| i.is_prefix_of(j))
            .map(|(j, _)| j.clone())
            .collect();
        for j in doomed {
            self.entries.remove(&j);
        }
    }

    /// `m[T]`: `T` on `dom(T)`, undefined on `dom(T)↑ ∖ dom(T)`, unchanged elsewhere.
    pub fn update(&self, t: &PMap<V>) -> PMap<V> {
        let mut out = self.clone();
        for i in t.entries.keys() {
            out.clear_above(i);
        }
        for (i, v) in &t.entries {
            out.entries.insert(i.clone(), *v);
        }
        out
    }

    /// Copy along an injection, as used for states.
    ///
    /// Each image point `ρ(j)` receives `extend(m)(j)`. When `j` itself is in
    /// the domain the value is always stored; otherwise it is stored only
    /// where it differs from what the image point would inherit, which keeps
    /// the stored entries minimal and the represented function exactly
    /// `extend(m)[extend(T)]` with `T(ρ(j)) = extend(m)(j)`.
    pub fn copy(&self, rho: &IndexInj) -> PMap<V> {
        let mut out = self.clone();
        for i in rho.backward.keys() {
            out.entries.remove(i);
            out.clear_above(i);
        }
        let mut targets: Vec<(&Index, &Index)> = rho.backward.iter().collect();
        targets.sort_by_key(|(i, _)| i.len());
        for (i, j) in targets {
            if let Some(v) = self.get(j.pairs()) {
                out.entries.insert(i.clone(), v);
            } else if let Some(v) = self.extend(j.pairs()) {
                if !out.extend_strict(i.pairs()).is_some_and(|u| u.same(v)) {
                    out.entries.insert(i.clone(), v);
                }
            }
        }
        out
    }

    /// Copy exactly as written pointwise: image points take `m(ρ⁻¹(i))`
    /// and are undefined when the source is. Used for flags, which are read
    /// pointwise rather than through `extend`.
    pub fn copy_strict(&self, rho: &IndexInj) -> PMap<V> {
        let mut out = self.clone();
        for i in rho.backward.keys() {
            out.entries.remove(i);
            out.clear_above(i);
        }
        for (i, j) in &rho.backward {
            if let Some(v) = self.get(j.pairs()) {
                out.entries.insert(i.clone(), v);
            }
        }
        out
    }

    /// `m|_A` for an index set.
    pub fn restrict(&self, a: &AChain) -> PMap<V> {
        PMap::from_entries(self.iter().filter(|(i, _)| a.contains(i)).map(|(i, v)| (i.clone(), v)))
    }

    /// Drops entries equal to the value they would inherit. Two maps
    /// containing `[]` represent the same function iff their canonical forms
    /// are equal.
    pub fn canonical(&self) -> PMap<V> {
        PMap::from_entries(
            self.entries
                .iter()
                .filter(|(i, v)| !self.extend_strict(i.pairs()).is_some_and(|u| u.same(**v)))
                .map(|(i, v)| (i.clone(), *v)),
        )
    }

    /// Entry-for-entry equality under `Scalar::same`.
    pub fn same_entries(&self, other: &PMap<V>) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((i, v), (j, u))| i == j && v.same(*u))
    }

    /// Equality of the represented functions.
    pub fn same_function(&self, other: &PMap<V>) -> bool {
        self.canonical().same_entries(&other.canonical())
    }

    /// `m =_L m'`: equal `extend` at every index of `L`.
    pub fn eq_on<'a>(&self, other: &PMap<V>, l: impl IntoIterator<Item = &'a Index>) -> bool {
        l.into_iter().all(|i| {
            match (self.extend(i.pairs()), other.extend(i.pairs())) {
                (Some(a), Some(b)) => a.same(b),
                (None, None) => true,
                _ => false,
            }
        })
    }

    /// Checks the state-cell invariant `[] ∈ dom`.
    pub fn check_rooted(&self) -> Result<()> {
        if self.entries.contains_key(&[][..]) {
            Ok(())
        } else {
            Err(Error::EmptyIndexLost)
        }
    }
}

impl PMap<f64> {
    /// `T ⊕ T'`.
    pub fn add(&self, other: &PMap<f64>) -> PMap<f64> {
        let mut out = self.clone();
        for (i, v) in &other.entries {
            out.entries
                .entry(i.clone())
                .and_modify(|u| *u += *v)
                .or_insert(*v);
        }
        out
    }

    /// `T^z_A`.
    pub fn zeros(a: &AChain) -> PMap<f64> {
        PMap::tabulate(a, |_| 0.0)
    }

    /// Sum of all entries in canonical index order.
    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }
}

impl<V: Scalar> PartialEq for PMap<V> {
    fn eq(&self, other: &Self) -> bool {
        self.same_entries(other)
    }
}

impl<V: Scalar> fmt::Debug for PMap<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, (i, v)) in self.entries.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}: {v:?}")?;
        }
        f.write_str("}")
    }
}

/// A finite injective partial map on indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexInj {
    forward: BTreeMap<Index, Index>,
    /// image point ↦ source
    backward: BTreeMap<Index, Index>,
}

impl IndexInj {
    pub fn new(pairs: impl IntoIterator<Item = (Index, Index)>) -> Result<Self> {
        let mut rho = IndexInj::default();
        for (from, to) in pairs {
            if rho.forward.contains_key(&from) || rho.backward.contains_key(&to) {
                return Err(Error::Invalid(format!("map is not injective at {from} ↦ {to}")));
            }
            rho.forward.insert(from.clone(), to.clone());
            rho.backward.insert(to, from);
        }
        Ok(rho)
    }

    pub fn apply(&self, i: &[Pair]) -> Option<&Index> {
        self.forward.get(i)
    }

    pub fn inverse(&self, i: &[Pair]) -> Option<&Index> {
        self.backward.get(i)
    }

    pub fn contains_source(&self, i: &[Pair]) -> bool {
        self.forward.contains_key(i)
    }

    pub fn image(&self) -> impl Iterator<Item = &Index> + '_ {
        self.backward.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Index, &Index)> + '_ {
        self.forward.iter()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// The map moving each thread's values to its successor along `s`:
    /// `i ↦ i⧺[(s,0)]` when that is in `A`, and `j⧺[(s,m)] ↦ j⧺[(s,m+1)]`
    /// when the source is in `A↓` and the target in `A`.
    pub fn shift(a: &AChain, s: &str) -> IndexInj {
        let mut rho = IndexInj::default();
        for target in a {
            let Some((name, k)) = target.last() else { continue };
            if &**name != s {
                continue;
            }
            let source = if *k == 0 {
                target.parent().expect("non-empty")
            } else if let Some(prev) = k.checked_sub(1) {
                let mut pairs = target.pairs().to_vec();
                pairs.last_mut().expect("non-empty").1 = prev;
                let cand = Index::from_pairs_unchecked(pairs);
                if !a.down_contains(cand.pairs()) {
                    continue;
                }
                cand
            } else {
                continue;
            };
            rho.backward.insert(target.clone(), source.clone());
            rho.forward.insert(source, target.clone());
        }
        rho
    }

    /// The exit map of a loop over `s` with `n` threads:
    /// `i⧺[(s,n−1)] ↦ i` for each `i ∈ A`.
    pub fn collapse(a: &AChain, s: &crate::index::Name, n: u32) -> Result<IndexInj> {
        let mut rho = IndexInj::default();
        for i in a {
            let from = i.extended(s.clone(), i64::from(n) - 1)?;
            rho.backward.insert(i.clone(), from.clone());
            rho.forward.insert(from, i.clone());
        }
        Ok(rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::idx;

    fn rv(l: i64) -> Index {
        idx(&[("rv", l)])
    }

    fn sigma_x() -> PMap<i64> {
        PMap::from_entries([(idx(&[]), 1), (rv(1), 3), (rv(2), 4)])
    }

    #[test]
    fn extend_examples() {
        assert_eq!(sigma_x().extend(rv(0).pairs()), Some(1));
        assert_eq!(PMap::constant(6i64).extend(rv(2).pairs()), Some(6));
        let m = PMap::from_entries([(idx(&[("a", 0)]), 5i64)]);
        assert_eq!(m.extend(&[]), None);
    }

    #[test]
    fn update_panels() {
        let t1 = PMap::constant(6i64);
        assert_eq!(sigma_x().update(&t1), PMap::constant(6));
        let t2 = PMap::from_entries([(rv(0), 8), (rv(2), 9)]);
        let want = PMap::from_entries([(idx(&[]), 1), (rv(0), 8), (rv(1), 3), (rv(2), 9)]);
        assert_eq!(sigma_x().update(&t2), want);
        assert_eq!(sigma_x().update(&PMap::new()), sigma_x());
    }

    #[test]
    fn copy_panels() {
        let rho1 = IndexInj::new([(idx(&[]), rv(0)), (rv(0), rv(1)), (rv(1), rv(2))]).unwrap();
        let want = PMap::from_entries([(idx(&[]), 1), (rv(0), 1), (rv(2), 3)]);
        assert_eq!(sigma_x().copy(&rho1), want);
        let rho2 = IndexInj::new([(rv(2), idx(&[]))]).unwrap();
        assert_eq!(sigma_x().copy(&rho2), PMap::constant(4));
        assert_eq!(sigma_x().copy(&IndexInj::default()), sigma_x());
    }

    #[test]
    fn shift_map_matches_panel() {
        let a = AChain::new((0..3).map(rv)).unwrap();
        let want = IndexInj::new([(idx(&[]), rv(0)), (rv(0), rv(1)), (rv(1), rv(2))]).unwrap();
        assert_eq!(IndexInj::shift(&a, "rv"), want);
    }

    #[test]
    fn collapse_map_matches_panel() {
        let rho = IndexInj::collapse(&AChain::root(), &"rv".into(), 3).unwrap();
        assert_eq!(rho, IndexInj::new([(rv(2), idx(&[]))]).unwrap());
    }

    #[test]
    fn copy_keeps_untouched_root() {
        // A cell the loop never wrote keeps its value through the exit copy.
        let rho = IndexInj::collapse(&AChain::root(), &"v".into(), 4).unwrap();
        assert_eq!(PMap::constant(5i64).copy(&rho), PMap::constant(5));
    }

    #[test]
    fn tensor_add_examples() {
        let a = PMap::constant(1.5);
        assert_eq!(a.add(&PMap::constant(2.0)), PMap::constant(3.5));
        let b = PMap::from_entries([(rv(0), 1.0)]);
        let c = PMap::from_entries([(rv(1), 2.0)]);
        assert_eq!(b.add(&c), PMap::from_entries([(rv(0), 1.0), (rv(1), 2.0)]));
        let dom = AChain::new([rv(0), rv(1)]).unwrap();
        let t = PMap::from_entries([(rv(0), 0.25), (rv(1), -3.0)]);
        assert_eq!(t.add(&PMap::zeros(&dom)), t);
    }

    #[test]
    fn zeros_examples() {
        assert_eq!(PMap::zeros(&AChain::root()), PMap::constant(0.0));
        assert!(PMap::zeros(&AChain::empty()).is_empty());
        assert_eq!(PMap::zeros(&AChain::new([rv(0), rv(1)]).unwrap()).len(), 2);
    }

    #[test]
    fn canonical_drops_inherited() {
        let m = PMap::from_entries([(idx(&[]), 1i64), (rv(0), 1), (rv(2), 3)]);
        assert_eq!(m.canonical(), PMap::from_entries([(idx(&[]), 1), (rv(2), 3)]));
        assert!(m.same_function(&m.canonical()));
        assert!(!m.same_function(&PMap::constant(1)));
    }

    #[test]
    fn eq_on_examples() {
        let m = sigma_x();
        let l = [rv(1)];
        assert!(m.eq_on(&m, &l));
        let w = m.update(&PMap::from_entries([(rv(0), 7)]));
        assert!(m.eq_on(&w, &l));
        assert!(!m.eq_on(&w, &[rv(0)]));
    }

    #[test]
    fn strict_copy_on_flags() {
        let rho1 = IndexInj::new([(idx(&[]), rv(0)), (rv(0), rv(1)), (rv(1), rv(2))]).unwrap();
        let flag = PMap::constant(0u8);
        assert_eq!(flag.copy_strict(&rho1), PMap::from_entries([(idx(&[]), 0u8), (rv(0), 0)]));
    }
}
