//! Relaxed fixed-point semantics.
//!
//! Alongside state and score, every run returns a flag: for each variable, a
//! finite map from indices to 0 (the first access at that index reads the
//! variable) or 1 (the first access writes it). A loop may stop as soon as two
//! consecutive rounds agree at every index whose first access is a read; the
//! values under write-first indices are about to be overwritten anyway.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ast::{Cmd, Expr, Tier, Ty, Var};
use crate::error::{Error, Result};
use crate::index::{AChain, Index};
use crate::pmap::{IndexInj, PMap, Tensor};
use crate::rdb::Rdb;
use crate::state::{Store, TgtState};
use crate::target::{
    assign, check_nan, collapse_score, eval_all, extend_chain, fetch_all, lookup_all, partition, site_ids, SiteStats,
    Trace,
};

pub const READ: u8 = 0;
pub const WRITE: u8 = 1;

/// Per-variable first-access maps. Variables without an entry map nothing.
#[derive(Clone, Default, PartialEq)]
pub struct Flag {
    per_var: BTreeMap<Var, PMap<u8>>,
}

impl Flag {
    pub fn empty() -> Self {
        Flag::default()
    }

    /// `B^A_b` for each of the given variables.
    pub fn uniform<'a>(vars: impl IntoIterator<Item = &'a Var>, a: &AChain, b: u8) -> Self {
        let mut f = Flag::empty();
        for x in vars {
            f.set(x, PMap::tabulate(a, |_| b));
        }
        f
    }

    pub fn set(&mut self, x: &Var, m: PMap<u8>) {
        if m.is_empty() {
            self.per_var.remove(x);
        } else {
            self.per_var.insert(x.clone(), m);
        }
    }

    pub fn get(&self, x: &Var) -> Option<&PMap<u8>> {
        self.per_var.get(x)
    }

    pub fn at(&self, x: &Var, i: &Index) -> Option<u8> {
        self.per_var.get(x).and_then(|m| m.get(i.pairs()))
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> + '_ {
        self.per_var.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &PMap<u8>)> + '_ {
        self.per_var.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.per_var.is_empty()
    }

    /// `π[h]`: entries of `self` win, `h` fills the gaps.
    pub fn update(&self, h: &Flag) -> Flag {
        let mut out = self.clone();
        for (x, m) in &h.per_var {
            let merged = match self.per_var.get(x) {
                None => m.clone(),
                Some(old) => {
                    let mut merged = m.clone();
                    for (i, b) in old.iter() {
                        merged.insert(i.clone(), b);
                    }
                    merged
                }
            };
            out.set(x, merged);
        }
        out
    }

    /// `self ≤ other`: every entry of `self` appears unchanged in `other`.
    pub fn leq(&self, other: &Flag) -> bool {
        self.per_var.iter().all(|(x, m)| {
            let o = other.per_var.get(x);
            m.iter().all(|(i, b)| o.and_then(|o| o.get(i.pairs())) == Some(b))
        })
    }

    /// `self ∖ smaller`: entries of `self` at indices `smaller` leaves undefined.
    pub fn diff(&self, smaller: &Flag) -> Result<Flag> {
        if !smaller.leq(self) {
            return Err(Error::NotComparable);
        }
        let mut out = Flag::empty();
        for (x, m) in &self.per_var {
            let keep = match smaller.per_var.get(x) {
                None => m.clone(),
                Some(s) => PMap::from_entries(m.iter().filter(|(i, _)| !s.contains(i.pairs())).map(|(i, b)| (i.clone(), b))),
            };
            out.set(x, keep);
        }
        Ok(out)
    }

    /// `π|_A`.
    pub fn restrict(&self, a: &AChain) -> Flag {
        let mut out = Flag::empty();
        for (x, m) in &self.per_var {
            out.set(x, m.restrict(a));
        }
        out
    }

    /// `π⟨ρ⟩`, copying entries pointwise.
    pub fn shift(&self, rho: &IndexInj) -> Flag {
        let mut out = Flag::empty();
        for (x, m) in &self.per_var {
            out.set(x, m.copy_strict(rho));
        }
        out
    }

    /// `π⟨ρ⟩⁻¹` for the shift map `ρ` built from `A`: indices of `A` take the
    /// value at their successor, other indices in the domain of `ρ` keep their
    /// value only if their successor agrees, and the rest are unchanged.
    pub fn unshift(&self, rho: &IndexInj, a: &AChain) -> Flag {
        let mut out = Flag::empty();
        for (x, m) in &self.per_var {
            let mut keys: BTreeSet<Index> = m.domain().cloned().collect();
            keys.extend(a.iter().cloned());
            let mut next = PMap::new();
            for i in keys {
                let here = m.get(i.pairs());
                let there = rho.apply(i.pairs()).and_then(|j| m.get(j.pairs()));
                let v = if a.contains(&i) {
                    there
                } else if rho.contains_source(i.pairs()) {
                    if here == there {
                        here
                    } else {
                        None
                    }
                } else {
                    here
                };
                if let Some(v) = v {
                    next.insert(i, v);
                }
            }
            out.set(x, next);
        }
        out
    }

    /// `π⟨ρ⟩⁻ⁿ`.
    pub fn unshift_n(&self, rho: &IndexInj, a: &AChain, n: u32) -> Flag {
        (0..n).fold(self.clone(), |f, _| f.unshift(rho, a))
    }

    /// Every index mentioned by the flag.
    pub fn domain(&self) -> BTreeSet<Index> {
        self.per_var.values().flat_map(|m| m.domain().cloned()).collect()
    }

    /// JSON-friendly form: variable name to list of `(index, bit)`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        for (x, m) in &self.per_var {
            let entries: Vec<serde_json::Value> = m
                .iter()
                .map(|(i, b)| serde_json::json!({ "index": i.to_string(), "flag": b }))
                .collect();
            obj.insert(x.to_string(), serde_json::Value::Array(entries));
        }
        serde_json::Value::Object(obj)
    }
}

impl fmt::Debug for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.per_var.iter().map(|(x, m)| (x.to_string(), m))).finish()
    }
}

/// True when, for every variable, the two states agree at each index of `A`
/// whose flag is not write-first.
pub fn fixcheck<S: Store>(s0: &TgtState<S>, s1: &TgtState<S>, pi: &Flag, a: &AChain) -> bool {
    s0.all_vars(s1).iter().all(|x| {
        a.iter()
            .filter(|i| pi.at(x, i) != Some(WRITE))
            .all(|i| s0.read(x, i).same(s1.read(x, i)))
    })
}

#[derive(Clone, Debug)]
pub struct RelaxedOutcome<S: Store> {
    pub state: TgtState<S>,
    pub flag: Flag,
    pub score: Tensor,
    /// Per `extended_loop_with_shift` site, in preorder.
    pub trace: Trace,
}

fn reads(vars: BTreeSet<Var>, a: &AChain) -> Flag {
    Flag::uniform(&vars, a, READ)
}

fn write(x: &Var, a: &AChain) -> Flag {
    Flag::uniform([x], a, WRITE)
}

struct Interp<'a> {
    db: &'a Rdb,
    sites: std::collections::HashMap<usize, usize>,
    trace: Trace,
}

type Step<S> = (TgtState<S>, Flag, Tensor);

impl Interp<'_> {
    fn run<S: Store>(&mut self, c: &Cmd, st: TgtState<S>, a: &AChain) -> Result<Step<S>> {
        let zeros = || PMap::zeros(a);
        match c {
            Cmd::Skip => Ok((st, Flag::empty(), zeros())),
            Cmd::Score(e) => {
                let t = eval_all(e, &st, a).map_err(|e| e.within("score"))?;
                let t = PMap::from_entries(t.into_iter().map(|(i, v)| (i, v.as_real())));
                Ok((st, reads(e.free_vars(), a), t))
            }
            Cmd::Fetch(x, ie) => {
                let vals = fetch_all(ie, self.db, &st, a).map_err(|e| e.within("fetch"))?;
                let x = Var { name: x.clone(), ty: Ty::Real };
                let flag = reads(ie.free_vars(), a).update(&write(&x, a));
                Ok((assign(&st, &x, vals)?, flag, zeros()))
            }
            Cmd::Assign(x, e) => {
                let vals = eval_all(e, &st, a).map_err(|e| e.within(&format!("assign {x}")))?;
                let flag = reads(e.free_vars(), a).update(&write(x, a));
                Ok((assign(&st, x, vals)?, flag, zeros()))
            }
            Cmd::LookupIndex(x, s) => {
                let x = Var { name: x.clone(), ty: Ty::Int };
                Ok((assign(&st, &x, lookup_all(s, a)?)?, write(&x, a), zeros()))
            }
            Cmd::Seq(cs) => {
                let mut st = st;
                let mut flag = Flag::empty();
                let mut total = zeros();
                for (n, c) in cs.iter().enumerate() {
                    let (s2, f, t) = self.run(c, st, a).map_err(|e| e.within(&format!("seq[{n}]")))?;
                    st = s2;
                    flag = flag.update(&f);
                    total = total.add(&t);
                }
                Ok((st, flag, total))
            }
            Cmd::Ifz(z, c1, c2) => {
                let (a1, a2) = partition(z, &st, a).map_err(|e| e.within("ifz"))?;
                let (st, f1, t1) = self.run(c1, st, &a1).map_err(|e| e.within("ifz.then"))?;
                let (st, f2, t2) = self.run(c2, st, &a2).map_err(|e| e.within("ifz.else"))?;
                let flag = reads(z.free_vars(), a).update(&f1).update(&f2);
                Ok((st, flag, t1.add(&t2)))
            }
            Cmd::For(x, n, body) => {
                let x = Var { name: x.clone(), ty: Ty::Int };
                let mut st = st;
                let mut flag = Flag::empty();
                let mut total = zeros();
                for k in 0..*n {
                    st = st.update_int(&x, &PMap::tabulate(a, |_| i64::from(k)))?;
                    flag = flag.update(&write(&x, a));
                    let (s2, f, t) = self.run(body, st, a).map_err(|e| e.within(&format!("for[{k}]")))?;
                    st = s2;
                    flag = flag.update(&f);
                    total = total.add(&t);
                }
                Ok((st, flag, total))
            }
            Cmd::ExtendedLoop(s, n, body) => {
                let site = self.sites[&(c as *const Cmd as usize)];
                let a2 = extend_chain(a, s, *n)?;
                let rho = IndexInj::shift(&a2, s);
                let mut st = st;
                let mut last = None;
                let mut rounds = 0;
                let mut early = false;
                for k in 0..*n {
                    let input = st.copy(&rho)?;
                    let (next, f, t) =
                        self.run(body, input.clone(), &a2).map_err(|e| e.within(&format!("loop[{k}]")))?;
                    rounds += 1;
                    let stop = k + 1 < *n && fixcheck(&input, &next.copy(&rho)?, &f, &a2);
                    st = next;
                    last = Some((f, t));
                    if stop {
                        early = true;
                        break;
                    }
                }
                self.trace.sites[site].record(rounds, early);
                let (f, t) = last.expect("at least one round");
                let exit = IndexInj::collapse(a, s, *n)?;
                let flag = first_access(&f, a, s, *n)?;
                Ok((st.copy(&exit)?, flag, collapse_score(&t, a, s, *n)?))
            }
            Cmd::LoopFixpt(..) | Cmd::ExtendIndex(..) | Cmd::Shift(_) => Err(Error::TierViolation {
                construct: "target-only command".into(),
                tier: Tier::Relaxed.to_string(),
            }),
        }
    }
}

/// Flag of a whole loop at each `j ∈ A`: the threads `j⧺[(s,k)]` run in
/// order, so the first thread that touches a variable decides.
fn first_access(f: &Flag, a: &AChain, s: &crate::index::Name, n: u32) -> Result<Flag> {
    let mut out = Flag::empty();
    for (x, m) in f.iter() {
        let mut proj = PMap::new();
        for j in a {
            for k in 0..n {
                if let Some(b) = m.get(j.extended(s.clone(), i64::from(k))?.pairs()) {
                    proj.insert(j.clone(), b);
                    break;
                }
            }
        }
        out.set(x, proj);
    }
    Ok(out)
}

/// Runs a relaxed program under `A`.
pub fn run_relaxed<S: Store>(c: &Cmd, db: &Rdb, sigma: &TgtState<S>, a: &AChain) -> Result<RelaxedOutcome<S>> {
    c.validate(Tier::Relaxed)?;
    let sites = site_ids(c, |n| matches!(n, Cmd::ExtendedLoop(..)));
    let mut it = Interp {
        db,
        trace: Trace {
            sites: vec![SiteStats::default(); sites.len()],
        },
        sites,
    };
    let (state, flag, score) = it.run(c, sigma.clone(), a)?;
    check_nan(&score)?;
    Ok(RelaxedOutcome {
        state,
        flag,
        score,
        trace: it.trace,
    })
}

/// Free variables read by an expression, for flag construction in tests.
pub fn expr_reads(e: &Expr, a: &AChain) -> Flag {
    reads(e.free_vars(), a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::idx;
    use crate::parse::parse;
    use crate::state::Sparse;

    fn i(l: i64) -> Index {
        idx(&[("v", l)])
    }

    fn fl(entries: &[(Index, u8)]) -> Flag {
        let mut f = Flag::empty();
        f.set(&Var::real("x"), PMap::from_entries(entries.iter().cloned()));
        f
    }

    #[test]
    fn update_first_wins() {
        let a = AChain::new([i(0), i(1)]).unwrap();
        let f = Flag::empty().update(&Flag::uniform([&Var::real("x")], &a, READ));
        assert_eq!(f, fl(&[(i(0), 0), (i(1), 0)]));
        let g = fl(&[(i(0), 1)]).update(&fl(&[(i(0), 0), (i(1), 0)]));
        assert_eq!(g, fl(&[(i(0), 1), (i(1), 0)]));
        assert_eq!(g.update(&Flag::empty()), g);
    }

    #[test]
    fn order_and_difference() {
        let big = fl(&[(i(0), 0), (i(1), 1)]);
        let small = fl(&[(i(0), 0)]);
        assert!(Flag::empty().leq(&big));
        assert!(small.leq(&big));
        assert_eq!(big.diff(&small).unwrap(), fl(&[(i(1), 1)]));
        assert_eq!(big.diff(&big).unwrap(), Flag::empty());
        assert_eq!(small.diff(&big).unwrap_err(), Error::NotComparable);
    }

    #[test]
    fn shift_copies_root_entry() {
        let rho = IndexInj::new([(Index::empty(), i(0)), (i(0), i(1)), (i(1), i(2))]).unwrap();
        let f = fl(&[(Index::empty(), 0)]).shift(&rho);
        assert_eq!(f.at(&Var::real("x"), &i(0)), Some(0));
    }

    #[test]
    fn unshift_of_empty_is_empty() {
        let a = AChain::new([i(0), i(1)]).unwrap();
        let rho = IndexInj::shift(&a, "v");
        assert_eq!(Flag::empty().unshift(&rho, &a), Flag::empty());
    }

    #[test]
    fn fixcheck_masks_write_first() {
        let a = AChain::new([i(0), i(1)]).unwrap();
        let x = Var::real("x");
        let mut s0 = TgtState::new(Sparse);
        s0.set_real(&x, &PMap::constant(1.0)).unwrap();
        let s1 = s0.update_real(&x, &PMap::from_entries([(i(0), 2.0)])).unwrap();
        assert!(fixcheck(&s0, &s0, &Flag::empty(), &a));
        assert!(!fixcheck(&s0, &s1, &Flag::empty(), &a));
        assert!(fixcheck(&s0, &s1, &fl(&[(i(0), 1)]), &a));
        assert!(!fixcheck(&s0, &s1, &fl(&[(i(0), 0)]), &a));
    }

    #[test]
    fn assignment_then_score() {
        let c = parse("x := 1.0; score(x)", Tier::Relaxed).unwrap();
        let out = run_relaxed(&c, &Rdb::default(), &TgtState::new(Sparse), &AChain::root()).unwrap();
        assert_eq!(out.flag, fl(&[(Index::empty(), 1)]));
        assert_eq!(out.score, PMap::constant(1.0));
    }

    #[test]
    fn skip_has_empty_flag() {
        let a = AChain::new([i(0), i(1)]).unwrap();
        let out = run_relaxed(&Cmd::Skip, &Rdb::default(), &TgtState::new(Sparse), &a).unwrap();
        assert!(out.flag.is_empty());
        assert_eq!(out.score, PMap::zeros(&a));
    }

    #[test]
    fn self_read_is_read_first() {
        let c = parse("x := add(x, 1.0)", Tier::Relaxed).unwrap();
        let out = run_relaxed(&c, &Rdb::default(), &TgtState::new(Sparse), &AChain::root()).unwrap();
        assert_eq!(out.flag, fl(&[(Index::empty(), 0)]));
    }

    #[test]
    fn loop_flag_takes_first_thread() {
        // Thread 0 writes x before reading it; later threads never see the
        // incoming value either.
        let c = parse(
            r#"extended_loop_with_shift("v", 3) { t:int := lookup_index("v"); x := to_real(t:int); score(x) }"#,
            Tier::Relaxed,
        )
        .unwrap();
        let out = run_relaxed(&c, &Rdb::default(), &TgtState::new(Sparse), &AChain::root()).unwrap();
        assert_eq!(out.flag.at(&Var::real("x"), &Index::empty()), Some(WRITE));
        assert_eq!(out.trace.sites[0].max_rounds, 1);
        assert_eq!(out.score, PMap::constant(3.0));
    }
}
