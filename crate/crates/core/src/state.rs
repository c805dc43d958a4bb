//! Target states and the storage backends that hold their cells.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::ast::{Cmd, Ty, Var};
use crate::dense::{Axes, DenseMap};
use crate::error::Result;
use crate::index::{Index, Name};
use crate::pmap::{IndexInj, PMap, Scalar};
use crate::prim::Val;

/// Storage for the cells of a target state. The sparse backend is the
/// reference; the dense backend keeps each cell as a full array.
pub trait Store: Clone + Send + Sync {
    type Cell<V: Scalar>: Clone + Send + Sync;

    fn constant<V: Scalar>(&self, v: V) -> Self::Cell<V>;
    fn from_pmap<V: Scalar>(&self, m: &PMap<V>) -> Result<Self::Cell<V>>;
    fn read<V: Scalar>(&self, c: &Self::Cell<V>, i: &Index) -> Option<V>;
    fn update<V: Scalar>(&self, c: &Self::Cell<V>, t: &PMap<V>) -> Result<Self::Cell<V>>;
    fn copy<V: Scalar>(&self, c: &Self::Cell<V>, rho: &IndexInj) -> Result<Self::Cell<V>>;
    fn same<V: Scalar>(&self, a: &Self::Cell<V>, b: &Self::Cell<V>) -> bool;
    /// Canonical sparse form.
    fn to_pmap<V: Scalar>(&self, c: &Self::Cell<V>) -> PMap<V>;
    /// Stored indices of a cell.
    fn stored<V: Scalar>(&self, c: &Self::Cell<V>) -> Vec<Index>;
    fn name(&self) -> &'static str;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sparse;

impl Store for Sparse {
    type Cell<V: Scalar> = PMap<V>;

    fn constant<V: Scalar>(&self, v: V) -> PMap<V> {
        PMap::constant(v)
    }
    fn from_pmap<V: Scalar>(&self, m: &PMap<V>) -> Result<PMap<V>> {
        Ok(m.clone())
    }
    fn read<V: Scalar>(&self, c: &PMap<V>, i: &Index) -> Option<V> {
        c.extend(i.pairs())
    }
    fn update<V: Scalar>(&self, c: &PMap<V>, t: &PMap<V>) -> Result<PMap<V>> {
        let out = c.update(t);
        out.check_rooted()?;
        Ok(out)
    }
    fn copy<V: Scalar>(&self, c: &PMap<V>, rho: &IndexInj) -> Result<PMap<V>> {
        Ok(c.copy(rho))
    }
    fn same<V: Scalar>(&self, a: &PMap<V>, b: &PMap<V>) -> bool {
        a.same_entries(b) || a.same_function(b)
    }
    fn to_pmap<V: Scalar>(&self, c: &PMap<V>) -> PMap<V> {
        c.canonical()
    }
    fn stored<V: Scalar>(&self, c: &PMap<V>) -> Vec<Index> {
        c.domain().cloned().collect()
    }
    fn name(&self) -> &'static str {
        "sparse"
    }
}

#[derive(Clone, Debug)]
pub struct Dense {
    axes: Axes,
}

impl Dense {
    pub fn new(axes: Axes) -> Self {
        Dense { axes }
    }

    /// Axis order for a target program: strings of enclosing loops first.
    pub fn for_program(c: &Cmd) -> Result<Self> {
        Dense::for_program_under(c, &[])
    }

    /// As `for_program`, for runs under indices over the `outer` strings,
    /// which get the leading axes in the given order.
    pub fn for_program_under(c: &Cmd, outer: &[Name]) -> Result<Self> {
        let mut strings = BTreeSet::new();
        let mut nesting = BTreeSet::new();
        collect_nesting(c, &mut outer.to_vec(), &mut strings, &mut nesting);
        for (k, s) in outer.iter().enumerate() {
            strings.insert(s.clone());
            for inner in &outer[k + 1..] {
                nesting.insert((s.clone(), inner.clone()));
            }
        }
        Ok(Dense {
            axes: Axes::from_nesting(&strings, &nesting)?,
        })
    }

    pub fn axes(&self) -> &Axes {
        &self.axes
    }
}

fn collect_nesting(c: &Cmd, stack: &mut Vec<Name>, strings: &mut BTreeSet<Name>, nesting: &mut BTreeSet<(Name, Name)>) {
    match c {
        Cmd::ExtendIndex(s, _, b) | Cmd::ExtendedLoop(s, _, b) => {
            strings.insert(s.clone());
            for outer in stack.iter() {
                nesting.insert((outer.clone(), s.clone()));
            }
            stack.push(s.clone());
            collect_nesting(b, stack, strings, nesting);
            stack.pop();
        }
        Cmd::Seq(cs) => cs.iter().for_each(|c| collect_nesting(c, stack, strings, nesting)),
        Cmd::Ifz(_, a, b) => {
            collect_nesting(a, stack, strings, nesting);
            collect_nesting(b, stack, strings, nesting);
        }
        Cmd::For(_, _, b) | Cmd::LoopFixpt(_, b) => collect_nesting(b, stack, strings, nesting),
        _ => {}
    }
}

impl Store for Dense {
    type Cell<V: Scalar> = DenseMap<V>;

    fn constant<V: Scalar>(&self, v: V) -> DenseMap<V> {
        DenseMap::constant(&self.axes, v)
    }
    fn from_pmap<V: Scalar>(&self, m: &PMap<V>) -> Result<DenseMap<V>> {
        m.check_rooted()?;
        DenseMap::encode(m, &self.axes)
    }
    fn read<V: Scalar>(&self, c: &DenseMap<V>, i: &Index) -> Option<V> {
        c.decode(i.pairs())
    }
    fn update<V: Scalar>(&self, c: &DenseMap<V>, t: &PMap<V>) -> Result<DenseMap<V>> {
        c.update(t, &self.axes)
    }
    fn copy<V: Scalar>(&self, c: &DenseMap<V>, rho: &IndexInj) -> Result<DenseMap<V>> {
        c.copy(rho, &self.axes)
    }
    fn same<V: Scalar>(&self, a: &DenseMap<V>, b: &DenseMap<V>) -> bool {
        a.same_function(b)
    }
    fn to_pmap<V: Scalar>(&self, c: &DenseMap<V>) -> PMap<V> {
        c.to_pmap()
    }
    fn stored<V: Scalar>(&self, c: &DenseMap<V>) -> Vec<Index> {
        c.to_pmap().domain().cloned().collect()
    }
    fn name(&self) -> &'static str {
        "dense"
    }
}

pub enum CellOf<S: Store> {
    Int(S::Cell<i64>),
    Real(S::Cell<f64>),
}

impl<S: Store> Clone for CellOf<S> {
    fn clone(&self) -> Self {
        match self {
            CellOf::Int(c) => CellOf::Int(c.clone()),
            CellOf::Real(c) => CellOf::Real(c.clone()),
        }
    }
}

/// A target state. Variables without a cell hold `{[] ↦ 0}`.
pub struct TgtState<S: Store> {
    store: S,
    cells: BTreeMap<Var, Arc<CellOf<S>>>,
}

impl<S: Store> Clone for TgtState<S> {
    fn clone(&self) -> Self {
        TgtState {
            store: self.store.clone(),
            cells: self.cells.clone(),
        }
    }
}

impl<S: Store> TgtState<S> {
    pub fn new(store: S) -> Self {
        TgtState {
            store,
            cells: BTreeMap::new(),
        }
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    /// The same cells held by another backend.
    pub fn rebase<T: Store>(&self, store: T) -> Result<TgtState<T>> {
        let mut out = TgtState::new(store);
        for (x, c) in self.canonical_all() {
            match c {
                CanonCell::Int(m) => out.set_int(&x, &m)?,
                CanonCell::Real(m) => out.set_real(&x, &m)?,
            }
        }
        Ok(out)
    }

    fn canonical_all(&self) -> BTreeMap<Var, CanonCell> {
        self.cells
            .iter()
            .map(|(x, c)| {
                let cell = match &**c {
                    CellOf::Int(c) => CanonCell::Int(self.store.to_pmap(c)),
                    CellOf::Real(c) => CanonCell::Real(self.store.to_pmap(c)),
                };
                (x.clone(), cell)
            })
            .collect()
    }

    /// Lifts a scalar state: every variable becomes `{[] ↦ value}`.
    pub fn from_scalars(store: S, vals: &BTreeMap<Var, Val>) -> Self {
        let mut st = TgtState::new(store);
        for (x, v) in vals {
            let cell = match *v {
                Val::Int(k) => CellOf::Int(st.store.constant(k)),
                Val::Real(r) => CellOf::Real(st.store.constant(r)),
            };
            st.cells.insert(x.clone(), Arc::new(cell));
        }
        st
    }

    pub fn set_int(&mut self, x: &Var, m: &PMap<i64>) -> Result<()> {
        let c = self.store.from_pmap(m)?;
        self.cells.insert(x.clone(), Arc::new(CellOf::Int(c)));
        Ok(())
    }

    pub fn set_real(&mut self, x: &Var, m: &PMap<f64>) -> Result<()> {
        let c = self.store.from_pmap(m)?;
        self.cells.insert(x.clone(), Arc::new(CellOf::Real(c)));
        Ok(())
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> + '_ {
        self.cells.keys()
    }

    /// `extend(σ(x))(i)`.
    pub fn read(&self, x: &Var, i: &Index) -> Val {
        match (self.cells.get(x).map(|c| &**c), x.ty) {
            (Some(CellOf::Int(c)), _) => Val::Int(self.store.read(c, i).unwrap_or(0)),
            (Some(CellOf::Real(c)), _) => Val::Real(self.store.read(c, i).unwrap_or(0.0)),
            (None, Ty::Int) => Val::Int(0),
            (None, Ty::Real) => Val::Real(0.0),
        }
    }

    pub fn update_int(&self, x: &Var, t: &PMap<i64>) -> Result<Self> {
        let old = match self.cells.get(x).map(|c| &**c) {
            Some(CellOf::Int(c)) => c.clone(),
            _ => self.store.constant(0),
        };
        let mut out = self.clone();
        out.cells
            .insert(x.clone(), Arc::new(CellOf::Int(self.store.update(&old, t)?)));
        Ok(out)
    }

    pub fn update_real(&self, x: &Var, t: &PMap<f64>) -> Result<Self> {
        let old = match self.cells.get(x).map(|c| &**c) {
            Some(CellOf::Real(c)) => c.clone(),
            _ => self.store.constant(0.0),
        };
        let mut out = self.clone();
        out.cells
            .insert(x.clone(), Arc::new(CellOf::Real(self.store.update(&old, t)?)));
        Ok(out)
    }

    /// `σ⟨ρ⟩` on every cell.
    pub fn copy(&self, rho: &IndexInj) -> Result<Self> {
        if rho.is_empty() {
            return Ok(self.clone());
        }
        let mut out = TgtState::new(self.store.clone());
        for (x, c) in &self.cells {
            let cell = match &**c {
                CellOf::Int(c) => CellOf::Int(self.store.copy(c, rho)?),
                CellOf::Real(c) => CellOf::Real(self.store.copy(c, rho)?),
            };
            out.cells.insert(x.clone(), Arc::new(cell));
        }
        Ok(out)
    }

    /// Canonical sparse cells, with variables whose function is the
    /// constant 0 omitted.
    pub fn canonical(&self) -> BTreeMap<Var, CanonCell> {
        let mut all = self.canonical_all();
        all.retain(|_, c| !c.is_default());
        all
    }

    pub fn cell_int(&self, x: &Var) -> PMap<i64> {
        match self.cells.get(x).map(|c| &**c) {
            Some(CellOf::Int(c)) => self.store.to_pmap(c),
            _ => PMap::constant(0),
        }
    }

    pub fn cell_real(&self, x: &Var) -> PMap<f64> {
        match self.cells.get(x).map(|c| &**c) {
            Some(CellOf::Real(c)) => self.store.to_pmap(c),
            _ => PMap::constant(0.0),
        }
    }

    /// Equality of the represented functions of every variable.
    pub fn same(&self, other: &Self) -> bool {
        let keys: BTreeSet<&Var> = self.cells.keys().chain(other.cells.keys()).collect();
        keys.into_iter().all(|x| {
            let a = self.cells.get(x);
            let b = other.cells.get(x);
            if let (Some(a), Some(b)) = (a, b) {
                if Arc::ptr_eq(a, b) {
                    return true;
                }
            }
            match x.ty {
                Ty::Int => {
                    let a = self.int_cell_or_zero(x);
                    let b = other.int_cell_or_zero(x);
                    self.store.same(&a, &b)
                }
                Ty::Real => {
                    let a = self.real_cell_or_zero(x);
                    let b = other.real_cell_or_zero(x);
                    self.store.same(&a, &b)
                }
            }
        })
    }

    fn int_cell_or_zero(&self, x: &Var) -> S::Cell<i64> {
        match self.cells.get(x).map(|c| &**c) {
            Some(CellOf::Int(c)) => c.clone(),
            _ => self.store.constant(0),
        }
    }

    fn real_cell_or_zero(&self, x: &Var) -> S::Cell<f64> {
        match self.cells.get(x).map(|c| &**c) {
            Some(CellOf::Real(c)) => c.clone(),
            _ => self.store.constant(0.0),
        }
    }

    /// `σ(x) =_L σ'(x)` for one variable.
    pub fn var_eq_on<'a>(&self, other: &Self, x: &Var, l: impl IntoIterator<Item = &'a Index>) -> bool {
        l.into_iter().all(|i| self.read(x, i).same(other.read(x, i)))
    }

    /// `σ =_L σ'` over the given variables.
    pub fn eq_on<'a>(&self, other: &Self, vars: &BTreeSet<Var>, l: impl IntoIterator<Item = &'a Index> + Clone) -> bool {
        vars.iter().all(|x| self.var_eq_on(other, x, l.clone()))
    }

    /// All variables with a cell in either state.
    pub fn all_vars(&self, other: &Self) -> BTreeSet<Var> {
        self.cells.keys().chain(other.cells.keys()).cloned().collect()
    }

    /// Every index stored in any cell, in canonical form.
    pub fn domain_indices(&self) -> BTreeSet<Index> {
        let mut out = BTreeSet::new();
        for c in self.canonical().values() {
            match c {
                CanonCell::Int(m) => out.extend(m.domain().cloned()),
                CanonCell::Real(m) => out.extend(m.domain().cloned()),
            }
        }
        out
    }

    /// Stored (not canonicalised) domains, for structural invariants.
    pub fn raw_domains(&self) -> BTreeMap<Var, Vec<Index>> {
        self.cells
            .iter()
            .map(|(x, c)| {
                let dom = match &**c {
                    CellOf::Int(c) => self.store.stored(c),
                    CellOf::Real(c) => self.store.stored(c),
                };
                (x.clone(), dom)
            })
            .collect()
    }

    /// Text form used for digests and CLI output.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (x, c) in self.canonical() {
            out.push_str(&format!("{x} = {c:?}\n"));
        }
        out
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }
}

impl TgtState<Sparse> {
    /// Raw stored map for a variable, without canonicalisation.
    pub fn raw_real(&self, x: &Var) -> Option<&PMap<f64>> {
        match self.cells.get(x).map(|c| &**c) {
            Some(CellOf::Real(c)) => Some(c),
            _ => None,
        }
    }

    pub fn raw_int(&self, x: &Var) -> Option<&PMap<i64>> {
        match self.cells.get(x).map(|c| &**c) {
            Some(CellOf::Int(c)) => Some(c),
            _ => None,
        }
    }
}

impl<S: Store> fmt::Debug for TgtState<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, PartialEq)]
pub enum CanonCell {
    Int(PMap<i64>),
    Real(PMap<f64>),
}

impl CanonCell {
    /// Entry-for-entry equality with bit-level comparison of reals.
    pub fn same(&self, other: &CanonCell) -> bool {
        match (self, other) {
            (CanonCell::Int(a), CanonCell::Int(b)) => a.same_entries(b),
            (CanonCell::Real(a), CanonCell::Real(b)) => a.same_entries(b),
            _ => false,
        }
    }

    fn is_default(&self) -> bool {
        match self {
            CanonCell::Int(m) => m.same_entries(&PMap::constant(0)),
            CanonCell::Real(m) => m.same_entries(&PMap::constant(0.0)),
        }
    }
}

impl fmt::Debug for CanonCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonCell::Int(m) => write!(f, "{m:?}"),
            CanonCell::Real(m) => write!(f, "{m:?}"),
        }
    }
}
