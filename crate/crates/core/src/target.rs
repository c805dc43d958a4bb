//! Big-step interpreter for the target language.
//!
//! Every command runs under an antichain `A` of indices and returns a score
//! tensor whose domain is exactly `A`.

use std::collections::HashMap;

use serde::Serialize;

use crate::ast::{Cmd, Tier, Ty, Var};
use crate::error::{Error, Result};
use crate::index::{AChain, Index, Name};
use crate::pmap::{IndexInj, PMap, Tensor};
use crate::prim::{eval, eval_index, Env, Val};
use crate::rdb::Rdb;
use crate::state::{Store, TgtState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Stop a `loop_fixpt_noacc` as soon as a round leaves the state unchanged.
    #[default]
    Fixpoint,
    /// Always run every round.
    Unrolled,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixpoint" => Ok(Mode::Fixpoint),
            "unrolled" => Ok(Mode::Unrolled),
            _ => Err(Error::Invalid(format!("unknown mode {s:?}"))),
        }
    }
}

/// Deliberately broken interpreter variants, used to check that the
/// differential oracles notice real bugs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutant {
    SkipShift,
    AccumulateScores,
    StopAfterFirstRound,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TgtConfig {
    pub mode: Mode,
    /// Run the else branch of `ifz` before the then branch.
    pub else_first: bool,
    pub mutant: Option<Mutant>,
}

impl TgtConfig {
    pub fn mode(mode: Mode) -> Self {
        TgtConfig {
            mode,
            ..TgtConfig::default()
        }
    }
}

/// Round statistics for one loop site.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SiteStats {
    pub executions: u64,
    pub total_rounds: u64,
    pub max_rounds: u32,
    pub early_exits: u64,
}

impl SiteStats {
    pub(crate) fn record(&mut self, rounds: u32, early: bool) {
        self.executions += 1;
        self.total_rounds += u64::from(rounds);
        self.max_rounds = self.max_rounds.max(rounds);
        self.early_exits += u64::from(early);
    }
}

/// Per-site statistics, indexed by the preorder position of the loop.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub sites: Vec<SiteStats>,
}

impl Trace {
    pub fn total_rounds(&self) -> u64 {
        self.sites.iter().map(|s| s.total_rounds).sum()
    }
}

#[derive(Clone, Debug)]
pub struct TgtOutcome<S: Store> {
    pub state: TgtState<S>,
    pub score: Tensor,
    pub trace: Trace,
}

/// Preorder numbering of the nodes selected by `is_site`, keyed by address.
pub(crate) fn site_ids(c: &Cmd, is_site: impl Fn(&Cmd) -> bool) -> HashMap<usize, usize> {
    let mut ids = HashMap::new();
    c.walk(&mut |n| {
        if is_site(n) {
            let k = ids.len();
            ids.insert(n as *const Cmd as usize, k);
        }
    });
    ids
}

/// Expression environment reading every variable at one index.
pub(crate) struct At<'a, S: Store> {
    pub st: &'a TgtState<S>,
    pub i: &'a Index,
}

impl<S: Store> Env for At<'_, S> {
    fn read(&self, v: &Var) -> Val {
        self.st.read(v, self.i)
    }
}

/// `σ[x : T]` for a tensor of values of either type.
pub(crate) fn assign<S: Store>(st: &TgtState<S>, x: &Var, vals: Vec<(Index, Val)>) -> Result<TgtState<S>> {
    match x.ty {
        Ty::Int => st.update_int(x, &PMap::from_entries(vals.into_iter().map(|(i, v)| (i, v.as_int())))),
        Ty::Real => st.update_real(x, &PMap::from_entries(vals.into_iter().map(|(i, v)| (i, v.as_real())))),
    }
}

pub(crate) fn eval_all<S: Store>(e: &crate::ast::Expr, st: &TgtState<S>, a: &AChain) -> Result<Vec<(Index, Val)>> {
    a.iter().map(|i| Ok((i.clone(), eval(e, &At { st, i })?))).collect()
}

pub(crate) fn fetch_all<S: Store>(
    ie: &crate::ast::IndexExpr,
    db: &Rdb,
    st: &TgtState<S>,
    a: &AChain,
) -> Result<Vec<(Index, Val)>> {
    a.iter()
        .map(|i| Ok((i.clone(), Val::Real(db.lookup(&eval_index(ie, &At { st, i })?)))))
        .collect()
}

pub(crate) fn lookup_all(s: &Name, a: &AChain) -> Result<Vec<(Index, Val)>> {
    a.iter()
        .map(|i| match i.lookup(s) {
            Some(k) => Ok((i.clone(), Val::Int(k))),
            None => Err(Error::MissingString {
                index: i.clone(),
                string: s.to_string(),
            }),
        })
        .collect()
}

/// Splits `A` by the value of the test at each index.
pub(crate) fn partition<S: Store>(z: &crate::ast::Expr, st: &TgtState<S>, a: &AChain) -> Result<(AChain, AChain)> {
    let mut yes = Vec::new();
    let mut no = Vec::new();
    for i in a {
        if eval(z, &At { st, i })?.as_int() == 0 {
            yes.push(i.clone());
        } else {
            no.push(i.clone());
        }
    }
    Ok((AChain::from_subset(yes.into_iter().collect()), AChain::from_subset(no.into_iter().collect())))
}

/// Checks the `extend_index` precondition and builds the extended antichain.
pub(crate) fn extend_chain(a: &AChain, s: &Name, n: u32) -> Result<AChain> {
    if let Some(i) = a.iter().find(|i| i.binds(s)) {
        return Err(Error::StringAlreadyPresent {
            index: i.clone(),
            string: s.to_string(),
        });
    }
    a.extend_indices(s, n)
}

/// `T''(i) = Σ_k T'(i ⧺ [(s,k)])`, summed in increasing `k`.
pub(crate) fn collapse_score(t: &Tensor, a: &AChain, s: &Name, n: u32) -> Result<Tensor> {
    a.iter()
        .map(|i| {
            let mut r = 0.0;
            for k in 0..n {
                let j = i.extended(s.clone(), i64::from(k))?;
                r += t
                    .get(j.pairs())
                    .ok_or_else(|| Error::Invalid(format!("score undefined at {j}")))?;
            }
            Ok((i.clone(), r))
        })
        .collect::<Result<Vec<_>>>()
        .map(PMap::from_entries)
}

pub(crate) fn check_nan(t: &Tensor) -> Result<()> {
    match t.iter().find(|(_, v)| v.is_nan()) {
        Some((i, _)) => Err(Error::NaNScore(i.clone())),
        None => Ok(()),
    }
}

struct Interp<'a> {
    db: &'a Rdb,
    cfg: TgtConfig,
    sites: HashMap<usize, usize>,
    trace: Trace,
}

impl Interp<'_> {
    fn run<S: Store>(&mut self, c: &Cmd, st: TgtState<S>, a: &AChain) -> Result<(TgtState<S>, Tensor)> {
        let zeros = || PMap::zeros(a);
        match c {
            Cmd::Skip => Ok((st, zeros())),
            Cmd::Score(e) => {
                let t = eval_all(e, &st, a).map_err(|e| e.within("score"))?;
                Ok((st, PMap::from_entries(t.into_iter().map(|(i, v)| (i, v.as_real())))))
            }
            Cmd::Fetch(x, ie) => {
                let vals = fetch_all(ie, self.db, &st, a).map_err(|e| e.within("fetch"))?;
                let x = Var { name: x.clone(), ty: Ty::Real };
                Ok((assign(&st, &x, vals)?, zeros()))
            }
            Cmd::Assign(x, e) => {
                let vals = eval_all(e, &st, a).map_err(|e| e.within(&format!("assign {x}")))?;
                Ok((assign(&st, x, vals)?, zeros()))
            }
            Cmd::LookupIndex(x, s) => {
                let x = Var { name: x.clone(), ty: Ty::Int };
                Ok((assign(&st, &x, lookup_all(s, a)?)?, zeros()))
            }
            Cmd::Seq(cs) => {
                let mut st = st;
                let mut total = zeros();
                for (n, c) in cs.iter().enumerate() {
                    let (s2, t) = self.run(c, st, a).map_err(|e| e.within(&format!("seq[{n}]")))?;
                    st = s2;
                    total = total.add(&t);
                }
                Ok((st, total))
            }
            Cmd::Ifz(z, c1, c2) => {
                let (a1, a2) = partition(z, &st, a).map_err(|e| e.within("ifz"))?;
                let then = |me: &mut Self, st| me.run(c1, st, &a1).map_err(|e| e.within("ifz.then"));
                let other = |me: &mut Self, st| me.run(c2, st, &a2).map_err(|e| e.within("ifz.else"));
                let (st, t1, t2) = if self.cfg.else_first {
                    let (st, t2) = other(self, st)?;
                    let (st, t1) = then(self, st)?;
                    (st, t1, t2)
                } else {
                    let (st, t1) = then(self, st)?;
                    let (st, t2) = other(self, st)?;
                    (st, t1, t2)
                };
                Ok((st, t1.add(&t2)))
            }
            Cmd::For(x, n, body) => {
                let x = Var { name: x.clone(), ty: Ty::Int };
                let mut st = st;
                let mut total = zeros();
                for k in 0..*n {
                    st = st.update_int(&x, &PMap::tabulate(a, |_| i64::from(k)))?;
                    let (s2, t) = self.run(body, st, a).map_err(|e| e.within(&format!("for[{k}]")))?;
                    st = s2;
                    total = total.add(&t);
                }
                Ok((st, total))
            }
            Cmd::ExtendIndex(s, n, body) => {
                let a2 = extend_chain(a, s, *n)?;
                let (st, t) = self.run(body, st, &a2).map_err(|e| e.within("extend_index"))?;
                let rho = IndexInj::collapse(a, s, *n)?;
                Ok((st.copy(&rho)?, collapse_score(&t, a, s, *n)?))
            }
            Cmd::LoopFixpt(n, body) => {
                let site = self.sites[&(c as *const Cmd as usize)];
                let mut st = st;
                let mut last = zeros();
                let mut acc = zeros();
                let mut rounds = 0;
                let mut early = false;
                for k in 0..*n {
                    let (next, t) = self.run(body, st.clone(), a).map_err(|e| e.within(&format!("loop[{k}]")))?;
                    rounds += 1;
                    let fixed = self.cfg.mode == Mode::Fixpoint && next.same(&st);
                    st = next;
                    acc = acc.add(&t);
                    last = t;
                    if self.cfg.mutant == Some(Mutant::StopAfterFirstRound) {
                        break;
                    }
                    if fixed {
                        early = k + 1 < *n;
                        break;
                    }
                }
                self.trace.sites[site].record(rounds, early);
                let score = if self.cfg.mutant == Some(Mutant::AccumulateScores) { acc } else { last };
                Ok((st, score))
            }
            Cmd::Shift(s) => {
                if self.cfg.mutant == Some(Mutant::SkipShift) {
                    return Ok((st, zeros()));
                }
                let rho = IndexInj::shift(a, s);
                Ok((st.copy(&rho)?, zeros()))
            }
            Cmd::ExtendedLoop(..) => Err(Error::TierViolation {
                construct: "extended_loop_with_shift".into(),
                tier: Tier::Target.to_string(),
            }),
        }
    }
}

/// Runs a target program under `A` with the default configuration.
pub fn run_tgt<S: Store>(c: &Cmd, db: &Rdb, sigma: &TgtState<S>, a: &AChain, mode: Mode) -> Result<TgtOutcome<S>> {
    run_tgt_with(c, db, sigma, a, TgtConfig::mode(mode))
}

pub fn run_tgt_with<S: Store>(c: &Cmd, db: &Rdb, sigma: &TgtState<S>, a: &AChain, cfg: TgtConfig) -> Result<TgtOutcome<S>> {
    c.validate(Tier::Target)?;
    let sites = site_ids(c, |n| matches!(n, Cmd::LoopFixpt(..)));
    let mut it = Interp {
        db,
        cfg,
        trace: Trace {
            sites: vec![SiteStats::default(); sites.len()],
        },
        sites,
    };
    let (state, score) = it.run(c, sigma.clone(), a)?;
    check_nan(&score)?;
    Ok(TgtOutcome {
        state,
        score,
        trace: it.trace,
    })
}

/// Runs under the empty antichain; the state must come back unchanged.
pub fn run_under_empty<S: Store>(c: &Cmd, db: &Rdb, sigma: &TgtState<S>) -> Result<TgtOutcome<S>> {
    run_tgt(c, db, sigma, &AChain::empty(), Mode::Fixpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::idx;
    use crate::parse::parse;
    use crate::state::{Dense, Sparse};

    fn sigma_x() -> TgtState<Sparse> {
        let mut st = TgtState::new(Sparse);
        let rv = |l| idx(&[("rv", l)]);
        st.set_int(&Var::int("x"), &PMap::from_entries([(Index::empty(), 1), (rv(1), 3), (rv(2), 4)]))
            .unwrap();
        st
    }

    #[test]
    fn pointwise_expression() {
        let st = sigma_x();
        let e = Expr::prim(crate::prim::Prim::Add, vec![Expr::Var(Var::int("x")), Expr::Int(2)]);
        let at = |l| idx(&[("rv", l)]);
        assert_eq!(eval(&e, &At { st: &st, i: &at(1) }).unwrap(), Val::Int(5));
        let x = Expr::Var(Var::int("x"));
        assert_eq!(eval(&x, &At { st: &st, i: &at(0) }).unwrap(), Val::Int(1));
        assert_eq!(eval(&x, &At { st: &st, i: &at(1) }).unwrap(), Val::Int(3));
    }

    use crate::ast::Expr;

    #[test]
    fn skip_returns_zeros() {
        let a = AChain::new([idx(&[("v", 0)]), idx(&[("v", 1)])]).unwrap();
        let out = run_tgt(&Cmd::Skip, &Rdb::default(), &sigma_x(), &a, Mode::Fixpoint).unwrap();
        assert_eq!(out.score, PMap::zeros(&a));
        assert!(out.state.same(&sigma_x()));
    }

    #[test]
    fn score_under_empty_chain() {
        let c = parse("score(1.0); x := 5.0", Tier::Target).unwrap();
        let out = run_under_empty(&c, &Rdb::default(), &sigma_x()).unwrap();
        assert!(out.score.is_empty());
        assert!(out.state.same(&sigma_x()));
    }

    #[test]
    fn lookup_index_requires_string() {
        let c = parse("t:int := lookup_index(\"v\")", Tier::Target).unwrap();
        let e = run_tgt(&c, &Rdb::default(), &sigma_x(), &AChain::root(), Mode::Fixpoint).unwrap_err();
        assert_eq!(e.kind(), "MissingString");
    }

    #[test]
    fn extend_index_rejects_bound_string() {
        let c = parse("extend_index(\"v\", 2) { skip }", Tier::Target).unwrap();
        let a = AChain::new([idx(&[("v", 0)])]).unwrap();
        let e = run_tgt(&c, &Rdb::default(), &sigma_x(), &a, Mode::Fixpoint).unwrap_err();
        assert_eq!(e.kind(), "StringAlreadyPresent");
    }

    #[test]
    fn skip_body_runs_one_round() {
        let c = parse("loop_fixpt_noacc(5) { skip }", Tier::Target).unwrap();
        let out = run_tgt(&c, &Rdb::default(), &sigma_x(), &AChain::root(), Mode::Fixpoint).unwrap();
        assert_eq!(out.trace.sites[0].max_rounds, 1);
        assert_eq!(out.trace.sites[0].early_exits, 1);
        let out = run_tgt(&c, &Rdb::default(), &sigma_x(), &AChain::root(), Mode::Unrolled).unwrap();
        assert_eq!(out.trace.sites[0].max_rounds, 5);
    }

    #[test]
    fn extend_index_sums_scores_and_keeps_last() {
        let c = parse(
            "extend_index(\"v\", 3) { t:int := lookup_index(\"v\"); x := to_real(t:int); score(x) }",
            Tier::Target,
        )
        .unwrap();
        let st = TgtState::new(Sparse);
        let out = run_tgt(&c, &Rdb::default(), &st, &AChain::root(), Mode::Fixpoint).unwrap();
        assert_eq!(out.score, PMap::constant(3.0));
        assert_eq!(out.state.cell_real(&Var::real("x")), PMap::constant(2.0));
        assert_eq!(out.state.cell_int(&Var::int("t")), PMap::constant(2));
    }

    #[test]
    fn ifz_splits_the_chain() {
        let c = parse(
            "extend_index(\"v\", 4) { t:int := lookup_index(\"v\"); ifz mod(t:int, 2) { score(1.0) } else { score(10.0) } }",
            Tier::Target,
        )
        .unwrap();
        let out = run_tgt(&c, &Rdb::default(), &TgtState::new(Sparse), &AChain::root(), Mode::Fixpoint).unwrap();
        assert_eq!(out.score, PMap::constant(22.0));
    }

    #[test]
    fn nan_score_is_reported() {
        let c = parse("score(NaN)", Tier::Target).unwrap();
        let e = run_tgt(&c, &Rdb::default(), &TgtState::new(Sparse), &AChain::root(), Mode::Fixpoint).unwrap_err();
        assert_eq!(e.kind(), "NaNScore");
    }

    #[test]
    fn dense_backend_agrees_on_small_program() {
        let c = parse(
            "extend_index(\"v\", 3) { loop_fixpt_noacc(3) { shift(\"v\"); t:int := lookup_index(\"v\"); y := add(y, to_real(t:int)) } }",
            Tier::Target,
        )
        .unwrap();
        let sp = run_tgt(&c, &Rdb::default(), &TgtState::new(Sparse), &AChain::root(), Mode::Fixpoint).unwrap();
        let store = Dense::for_program(&c).unwrap();
        let de = run_tgt(&c, &Rdb::default(), &TgtState::new(store), &AChain::root(), Mode::Fixpoint).unwrap();
        assert_eq!(sp.state.canonical(), de.state.canonical());
        assert_eq!(sp.score, de.score);
        assert_eq!(sp.trace, de.trace);
        // 0 + 1 + 2 accumulated across the chain
        assert_eq!(sp.state.cell_real(&Var::real("y")), PMap::constant(3.0));
    }
}
