//! Dense array encoding of partial maps: one axis per string, slot 0 of each
//! axis for "string absent" and slot `k+1` for integer `k`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::index::{Index, Name, Pair};
use crate::pmap::{IndexInj, PMap, Scalar};

/// A dense map. Every cell holds `extend(m)` at the index formed by the
/// cell's present coordinates in axis order.
#[derive(Clone, Debug)]
pub struct DenseMap<V> {
    axes: Arc<Vec<Name>>,
    extents: Vec<usize>,
    cells: Vec<Option<V>>,
}

/// Axis order shared by all maps of one run.
#[derive(Clone, Debug)]
pub struct Axes {
    names: Arc<Vec<Name>>,
    pos: BTreeMap<Name, usize>,
}

impl Axes {
    pub fn new(names: Vec<Name>) -> Result<Self> {
        let mut pos = BTreeMap::new();
        for (p, n) in names.iter().enumerate() {
            if pos.insert(n.clone(), p).is_some() {
                return Err(Error::DuplicateIndexString(n.to_string()));
            }
        }
        Ok(Axes {
            names: Arc::new(names),
            pos,
        })
    }

    /// From a string → axis-number map.
    pub fn from_dims(dims: &BTreeMap<Name, usize>) -> Result<Self> {
        let mut names: Vec<(usize, Name)> = dims.iter().map(|(n, p)| (*p, n.clone())).collect();
        names.sort();
        for (want, (got, _)) in names.iter().enumerate() {
            if want != *got {
                return Err(Error::Invalid("axis numbers must be 0..k without gaps".into()));
            }
        }
        Axes::new(names.into_iter().map(|(_, n)| n).collect())
    }

    /// Orders strings so that every string bound by an enclosing loop comes
    /// before the strings bound inside it. `nesting` lists (outer, inner)
    /// pairs.
    pub fn from_nesting(strings: &BTreeSet<Name>, nesting: &BTreeSet<(Name, Name)>) -> Result<Self> {
        let mut indeg: BTreeMap<&Name, usize> = strings.iter().map(|s| (s, 0)).collect();
        for (_, inner) in nesting {
            *indeg.get_mut(inner).expect("known string") += 1;
        }
        let mut order = Vec::new();
        let mut ready: BTreeSet<&Name> = indeg.iter().filter(|(_, d)| **d == 0).map(|(s, _)| *s).collect();
        while let Some(s) = ready.pop_first() {
            order.push(s.clone());
            for (outer, inner) in nesting {
                if outer == s {
                    let d = indeg.get_mut(inner).expect("known string");
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(inner);
                    }
                }
            }
        }
        if order.len() != strings.len() {
            let stuck: Vec<&Name> = indeg.iter().filter(|(_, d)| **d > 0).map(|(s, _)| *s).collect();
            let a = stuck.first().map(|s| s.to_string()).unwrap_or_default();
            let b = stuck.get(1).map(|s| s.to_string()).unwrap_or_default();
            return Err(Error::UnsupportedAxisOrder(a, b));
        }
        Axes::new(order)
    }

    pub fn names(&self) -> &[Name] {
        &self.names
    }

    /// Axis coordinates of an index, or the reason it has none.
    fn coords_exact(&self, i: &[Pair]) -> Result<Vec<(usize, i64)>> {
        let mut out = Vec::with_capacity(i.len());
        let mut last: Option<usize> = None;
        for (s, k) in i {
            let p = *self.pos.get(s).ok_or_else(|| Error::UnknownString(s.to_string()))?;
            if last.is_some_and(|l| l >= p) {
                let prev = &self.names[last.expect("checked")];
                return Err(Error::UnsupportedAxisOrder(prev.to_string(), s.to_string()));
            }
            if *k < 0 {
                return Err(Error::NegativeComponent {
                    string: s.to_string(),
                    value: *k,
                });
            }
            out.push((p, *k));
            last = Some(p);
        }
        Ok(out)
    }
}

impl<V: Scalar> DenseMap<V> {
    /// Encodes with the smallest extents that hold every integer in `dom(m)`.
    pub fn encode(m: &PMap<V>, axes: &Axes) -> Result<Self> {
        Self::encode_with_extents(m, axes, &[])
    }

    /// Encodes with at least the given extents per axis.
    pub fn encode_with_extents(m: &PMap<V>, axes: &Axes, min_extents: &[usize]) -> Result<Self> {
        let mut extents = vec![1usize; axes.names.len()];
        for (p, e) in min_extents.iter().enumerate().take(extents.len()) {
            extents[p] = (*e).max(1);
        }
        for i in m.domain() {
            for (p, k) in axes.coords_exact(i.pairs())? {
                extents[p] = extents[p].max(slot_extent(k)?);
            }
        }
        let mut d = DenseMap {
            axes: axes.names.clone(),
            extents,
            cells: Vec::new(),
        };
        let size = d.size();
        d.cells = (0..size).map(|c| m.extend(d.index_of(c).pairs())).collect();
        Ok(d)
    }

    pub fn constant(axes: &Axes, v: V) -> Self {
        DenseMap {
            axes: axes.names.clone(),
            extents: vec![1; axes.names.len()],
            cells: vec![Some(v)],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.extents
    }

    pub fn axes(&self) -> &[Name] {
        &self.axes
    }

    pub fn size(&self) -> usize {
        self.extents.iter().product()
    }

    /// Cell at coordinates given as integers, `-1` meaning "absent".
    pub fn cell(&self, coords: &[i64]) -> Option<V> {
        if coords.len() != self.extents.len() {
            return None;
        }
        let mut flat = 0;
        for (c, e) in coords.iter().zip(&self.extents) {
            let slot = usize::try_from(c + 1).ok().filter(|s| s < e)?;
            flat = flat * e + slot;
        }
        self.cells[flat]
    }

    /// `extend(m)(i)`. Reading stops at the first pair that no stored entry
    /// can match: an unknown string, a string out of axis order, or an
    /// integer outside the extent.
    pub fn decode(&self, i: &[Pair]) -> Option<V> {
        self.cells[self.flat_truncated(i)]
    }

    fn flat_truncated(&self, i: &[Pair]) -> usize {
        let mut slots = vec![0usize; self.extents.len()];
        let mut last: Option<usize> = None;
        for (s, k) in i {
            let Some(p) = self.axes.iter().position(|a| a == s) else { break };
            if last.is_some_and(|l| l >= p) {
                break;
            }
            let Some(slot) = usize::try_from(*k).ok().map(|k| k + 1).filter(|s| *s < self.extents[p]) else {
                break;
            };
            slots[p] = slot;
            last = Some(p);
        }
        self.flatten(&slots)
    }

    fn flatten(&self, slots: &[usize]) -> usize {
        slots.iter().zip(&self.extents).fold(0, |acc, (s, e)| acc * e + s)
    }

    fn slots_of(&self, mut flat: usize) -> Vec<usize> {
        let mut slots = vec![0; self.extents.len()];
        for p in (0..self.extents.len()).rev() {
            slots[p] = flat % self.extents[p];
            flat /= self.extents[p];
        }
        slots
    }

    fn index_of_slots(&self, slots: &[usize]) -> Index {
        Index::from_pairs_unchecked(
            slots
                .iter()
                .enumerate()
                .filter(|(_, s)| **s > 0)
                .map(|(p, s)| (self.axes[p].clone(), *s as i64 - 1))
                .collect(),
        )
    }

    fn index_of(&self, flat: usize) -> Index {
        self.index_of_slots(&self.slots_of(flat))
    }

    /// Re-encodes with larger extents.
    fn grown(&self, extents: &[usize]) -> Self {
        if extents == self.extents.as_slice() {
            return self.clone();
        }
        let mut d = DenseMap {
            axes: self.axes.clone(),
            extents: extents.to_vec(),
            cells: Vec::new(),
        };
        let size = d.size();
        d.cells = (0..size).map(|c| self.decode(d.index_of(c).pairs())).collect();
        d
    }

    fn extents_for(&self, t: &PMap<V>, axes: &Axes) -> Result<Vec<usize>> {
        let mut extents = self.extents.clone();
        for i in t.domain() {
            for (p, k) in axes.coords_exact(i.pairs())? {
                extents[p] = extents[p].max(slot_extent(k)?);
            }
        }
        Ok(extents)
    }

    /// Writes `extend(t)` over the represented function.
    fn overwrite(&mut self, t: &PMap<V>, axes: &Axes) -> Result<()> {
        let mut entries: Vec<(&Index, V)> = t.iter().collect();
        entries.sort_by_key(|(i, _)| i.len());
        for (i, v) in entries {
            let coords = axes.coords_exact(i.pairs())?;
            let fixed_upto = coords.last().map_or(0, |(p, _)| p + 1);
            let mut fixed = vec![0usize; fixed_upto];
            for (p, k) in &coords {
                fixed[*p] = *k as usize + 1;
            }
            let inner: usize = self.extents[fixed_upto..].iter().product();
            let base = fixed
                .iter()
                .zip(&self.extents)
                .fold(0, |acc, (s, e)| acc * e + s)
                * inner;
            for c in &mut self.cells[base..base + inner] {
                *c = Some(v);
            }
        }
        Ok(())
    }

    /// State update: the result represents `extend(self)[extend(t)]`.
    pub fn update(&self, t: &PMap<V>, axes: &Axes) -> Result<Self> {
        let mut out = self.grown(&self.extents_for(t, axes)?);
        out.overwrite(t, axes)?;
        Ok(out.trimmed())
    }

    /// Shrinks to extent 1 every axis the represented function no longer
    /// depends on. Without this a variable written in many sequential loops
    /// would carry one grown axis per loop.
    fn trimmed(mut self) -> Self {
        for p in (0..self.extents.len()).rev() {
            if self.extents[p] == 1 {
                continue;
            }
            let mut extents = self.extents.clone();
            extents[p] = 1;
            let cand = self.grown(&extents);
            let keeps = (0..self.size()).all(|c| {
                match (self.cells[c], cand.decode(self.index_of(c).pairs())) {
                    (Some(a), Some(b)) => a.same(b),
                    (None, None) => true,
                    _ => false,
                }
            });
            if keeps {
                self = cand;
            }
        }
        self
    }

    /// Copy along an injection: each image point `ρ(j)` receives the
    /// represented value at `j`.
    pub fn copy(&self, rho: &IndexInj, axes: &Axes) -> Result<Self> {
        let t = PMap::from_entries(
            rho.iter()
                .filter_map(|(j, i)| self.decode(j.pairs()).map(|v| (i.clone(), v))),
        );
        self.update(&t, axes)
    }

    /// Equality of the represented functions on the axis-ordered indices.
    pub fn same_function(&self, other: &DenseMap<V>) -> bool {
        let extents: Vec<usize> = self.extents.iter().zip(&other.extents).map(|(a, b)| *a.max(b)).collect();
        let a = self.grown(&extents);
        let b = other.grown(&extents);
        a.cells.iter().zip(&b.cells).all(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => x.same(*y),
            (None, None) => true,
            _ => false,
        })
    }

    /// The canonical sparse map with the same function.
    pub fn to_pmap(&self) -> PMap<V> {
        let mut out = PMap::new();
        for flat in 0..self.size() {
            let Some(v) = self.cells[flat] else { continue };
            let mut slots = self.slots_of(flat);
            let keep = match slots.iter().rposition(|s| *s > 0) {
                None => true,
                Some(p) => {
                    slots[p] = 0;
                    !self.cells[self.flatten(&slots)].is_some_and(|u| u.same(v))
                }
            };
            if keep {
                out.insert(self.index_of(flat), v);
            }
        }
        out
    }

    /// CSV dump: one column per axis (`-1` for absent) and a value column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for a in self.axes.iter() {
            let _ = write!(out, "{a},");
        }
        out.push_str("value\n");
        for flat in 0..self.size() {
            for s in self.slots_of(flat) {
                let _ = write!(out, "{},", s as i64 - 1);
            }
            match self.cells[flat] {
                Some(v) => {
                    let _ = writeln!(out, "{v:?}");
                }
                None => out.push('\n'),
            }
        }
        out
    }
}

fn slot_extent(k: i64) -> Result<usize> {
    usize::try_from(k)
        .ok()
        .and_then(|k| k.checked_add(2))
        .filter(|e| *e <= 1 << 20)
        .ok_or_else(|| Error::Invalid(format!("index component {k} too large for a dense axis")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::idx;

    fn axes2() -> Axes {
        Axes::new(vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn scalar_broadcast() {
        let axes = Axes::new(vec!["a".into()]).unwrap();
        let d = DenseMap::encode_with_extents(&PMap::constant(5i64), &axes, &[2]).unwrap();
        assert_eq!(d.shape(), &[2]);
        assert_eq!(d.cell(&[-1]), Some(5));
        assert_eq!(d.cell(&[0]), Some(5));
    }

    #[test]
    fn grid_shape_and_cells() {
        let mut m = PMap::constant(-1i64);
        for i in 0..=9 {
            m.insert(idx(&[("a", i)]), 100 + i);
            for j in 0..=8 {
                m.insert(idx(&[("a", i), ("b", j)]), 1000 + 10 * i + j);
            }
        }
        let d = DenseMap::encode(&m, &axes2()).unwrap();
        assert_eq!(d.shape(), &[11, 10]);
        assert_eq!(d.cell(&[-1, -1]), Some(-1));
        assert_eq!(d.cell(&[4, -1]), Some(104));
        assert_eq!(d.cell(&[-1, 7]), Some(-1));
        assert_eq!(d.cell(&[3, 2]), Some(1032));
        assert!(d.to_pmap().same_function(&m));
    }

    #[test]
    fn unknown_and_negative_rejected() {
        let m = PMap::from_entries([(idx(&[]), 0i64), (idx(&[("c", 0)]), 1)]);
        assert!(matches!(DenseMap::encode(&m, &axes2()), Err(Error::UnknownString(_))));
        let m = PMap::from_entries([(idx(&[]), 0i64), (idx(&[("a", -1)]), 1)]);
        assert!(matches!(DenseMap::encode(&m, &axes2()), Err(Error::NegativeComponent { .. })));
    }

    #[test]
    fn update_grows_and_matches_sparse() {
        let axes = axes2();
        let m = PMap::from_entries([(idx(&[]), 1i64), (idx(&[("a", 1)]), 3)]);
        let d = DenseMap::encode(&m, &axes).unwrap();
        let t = PMap::from_entries([(idx(&[("a", 4), ("b", 2)]), 9), (idx(&[("a", 1)]), 8)]);
        let du = d.update(&t, &axes).unwrap();
        assert_eq!(du.shape(), &[6, 4]);
        assert!(du.to_pmap().same_function(&m.update(&t)));
    }

    #[test]
    fn nesting_order() {
        let strings: BTreeSet<Name> = ["x".into(), "y".into(), "z".into()].into();
        let nest: BTreeSet<(Name, Name)> = [("y".into(), "x".into()), ("x".into(), "z".into())].into();
        let axes = Axes::from_nesting(&strings, &nest).unwrap();
        let names: Vec<&str> = axes.names().iter().map(|n| &**n).collect();
        assert_eq!(names, ["y", "x", "z"]);
        let cyc: BTreeSet<(Name, Name)> = [("y".into(), "x".into()), ("x".into(), "y".into())].into();
        assert!(Axes::from_nesting(&strings, &cyc).is_err());
    }
}
