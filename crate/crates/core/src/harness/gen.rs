//! Random programs, databases and states.
//!
//! Generation is a pure function of the configuration. Only operations that
//! cannot fail are emitted: `mod` and `div` take nonzero literal divisors,
//! `log` a positive literal, and `normal_logpdf` a positive literal scale.
//! This matters because vectorised loops evaluate speculative iterations on
//! data the source program never sees.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ast::{Cmd, Expr, IndexExpr, Tier, Ty, Var};
use crate::index::{AChain, Index, Name};
use crate::pmap::PMap;
use crate::prim::{Prim, Val};
use crate::rdb::Rdb;
use crate::source::SrcState;
use crate::state::{Sparse, TgtState};
use crate::vectorise::{vectorise, vectorise_relaxed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: u32,
    pub max_loop_len: u32,
    pub max_vars: u32,
    /// Longest statement sequence in one block.
    pub max_block: u32,
    pub tier: Tier,
    pub ifz: bool,
    pub nesting: bool,
    pub fetch: bool,
    /// Add loop-carried updates so fixed-point loops need several rounds.
    pub data_dep: bool,
    /// Cap on the product of the lengths of nested loops.
    pub max_threads: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_depth: 4,
            max_loop_len: 6,
            max_vars: 6,
            max_block: 4,
            tier: Tier::Source,
            ifz: true,
            nesting: true,
            fetch: true,
            data_dep: true,
            max_threads: 64,
        }
    }
}

impl GenConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        GenConfig { seed, ..self.clone() }
    }

    pub fn with_tier(&self, tier: Tier) -> Self {
        GenConfig { tier, ..self.clone() }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.max_loop_len == 0 || self.max_vars == 0 || self.max_block == 0 || self.max_threads == 0 {
            return Err(crate::Error::Invalid(
                "max_loop_len, max_vars, max_block and max_threads must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Deterministic generator stream for one `(seed, attempt)` pair.
pub fn rng_for(seed: u64, attempt: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(attempt);
    r
}

pub const FETCH_STRINGS: [&str; 2] = ["z", "w"];
pub const COUNTERS: [&str; 2] = ["t", "u"];
/// Strings of the antichains that generated target programs run under.
pub const OUTER_STRINGS: [&str; 2] = ["q", "r"];

const REALS: [f64; 9] = [-2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 1.5, 3.0];

pub struct Gen<'a, R: Rng> {
    pub rng: &'a mut R,
    cfg: GenConfig,
    reals: Vec<Var>,
    ints: Vec<Var>,
    /// Enclosing `extend_index` strings, innermost last.
    strings: Vec<Name>,
    loop_depth: u32,
    /// Product of the lengths of the enclosing loops.
    threads: u32,
}

impl<'a, R: Rng> Gen<'a, R> {
    pub fn new(rng: &'a mut R, cfg: &GenConfig) -> Self {
        let mut reals = Vec::new();
        let mut ints = Vec::new();
        for k in 0..cfg.max_vars {
            let name = format!("v{k}");
            if k % 3 == 2 {
                ints.push(Var::int(&name));
            } else {
                reals.push(Var::real(&name));
            }
        }
        Gen {
            rng,
            cfg: cfg.clone(),
            reals,
            ints,
            strings: Vec::new(),
            loop_depth: 0,
            threads: 1,
        }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn real_var(&mut self) -> Var {
        self.reals.choose(self.rng).cloned().unwrap_or_else(|| Var::real("v0"))
    }

    fn int_var(&mut self) -> Var {
        let k = self.rng.random_range(0..self.ints.len() + COUNTERS.len());
        match self.ints.get(k) {
            Some(v) => v.clone(),
            None => Var::int(COUNTERS[k - self.ints.len()]),
        }
    }

    fn real_lit(&mut self) -> Expr {
        Expr::Real(*REALS.choose(self.rng).expect("non-empty"))
    }

    pub fn real_expr(&mut self, depth: u32) -> Expr {
        if depth == 0 || self.chance(0.3) {
            return if self.chance(0.7) {
                Expr::Var(self.real_var())
            } else {
                self.real_lit()
            };
        }
        let d = depth - 1;
        match self.rng.random_range(0..10) {
            0 | 1 => Expr::prim(Prim::Add, vec![self.real_expr(d), self.real_expr(d)]),
            2 => Expr::prim(Prim::Sub, vec![self.real_expr(d), self.real_expr(d)]),
            3 => Expr::prim(Prim::Mul, vec![self.real_expr(d), self.real_expr(d)]),
            4 => Expr::prim(Prim::Neg, vec![self.real_expr(d)]),
            5 => Expr::prim(Prim::ToReal, vec![self.int_expr(d)]),
            6 => {
                let sd = *[0.5, 1.0, 2.0].choose(self.rng).expect("non-empty");
                Expr::prim(Prim::NormalLogpdf, vec![self.real_expr(d), self.real_expr(d), Expr::Real(sd)])
            }
            7 => {
                let x = *[-1.0, 0.0, 0.5, 1.0].choose(self.rng).expect("non-empty");
                Expr::prim(Prim::Exp, vec![Expr::Real(x)])
            }
            8 => {
                let x = *[0.5, 1.0, 2.0, 10.0].choose(self.rng).expect("non-empty");
                Expr::prim(Prim::Log, vec![Expr::Real(x)])
            }
            _ => {
                let y = *[-2.0, 0.5, 4.0].choose(self.rng).expect("non-empty");
                Expr::prim(Prim::Div, vec![self.real_expr(d), Expr::Real(y)])
            }
        }
    }

    pub fn int_expr(&mut self, depth: u32) -> Expr {
        if depth == 0 || self.chance(0.3) {
            return if self.chance(0.7) {
                Expr::Var(self.int_var())
            } else {
                Expr::Int(self.rng.random_range(-3..=3))
            };
        }
        let d = depth - 1;
        match self.rng.random_range(0..7) {
            0 => Expr::prim(Prim::Add, vec![self.int_expr(d), self.int_expr(d)]),
            1 => Expr::prim(Prim::Sub, vec![self.int_expr(d), self.int_expr(d)]),
            2 => Expr::prim(Prim::Mul, vec![self.int_expr(d), self.int_expr(d)]),
            3 => {
                let m = *[2, 3, -2].choose(self.rng).expect("non-empty");
                Expr::prim(Prim::Mod, vec![self.int_expr(d), Expr::Int(m)])
            }
            4 => Expr::prim(Prim::Eq, vec![self.int_expr(d), self.int_expr(d)]),
            5 => Expr::prim(Prim::Lt, vec![self.real_expr(d), self.real_expr(d)]),
            _ => Expr::prim(Prim::Lt, vec![self.int_expr(d), self.int_expr(d)]),
        }
    }

    fn index_expr(&mut self) -> IndexExpr {
        let n = self.rng.random_range(1..=2);
        let mut strings = FETCH_STRINGS.to_vec();
        if n == 1 {
            strings = vec![*strings.choose(self.rng).expect("non-empty")];
        }
        IndexExpr(
            strings
                .into_iter()
                .map(|s| {
                    let z = if self.chance(0.6) {
                        Expr::Var(Var::int(COUNTERS.choose(self.rng).expect("non-empty")))
                    } else {
                        self.int_expr(1)
                    };
                    (Name::from(s), z)
                })
                .collect(),
        )
    }

    fn atomic(&mut self) -> Cmd {
        let target = self.cfg.tier != Tier::Source;
        let roll = self.rng.random_range(0..100);
        if target && !self.strings.is_empty() && roll < 12 {
            let s = self.strings.choose(self.rng).expect("non-empty").clone();
            return if self.chance(0.6) {
                Cmd::LookupIndex(self.int_var().name, s)
            } else {
                Cmd::Shift(s)
            };
        }
        match roll {
            0..=4 => Cmd::Skip,
            5..=29 => Cmd::Score(self.real_expr(2)),
            30..=49 if self.cfg.fetch => {
                let x = self.real_var();
                Cmd::Fetch(x.name, self.index_expr())
            }
            30..=79 => {
                let x = self.real_var();
                Cmd::Assign(x, self.real_expr(2))
            }
            _ => {
                let x = self.int_var();
                Cmd::Assign(x, self.int_expr(2))
            }
        }
    }

    fn block(&mut self, depth: u32) -> Cmd {
        let n = self.rng.random_range(1..=self.cfg.max_block);
        Cmd::seq((0..n).map(|_| self.cmd(depth)))
    }

    fn loop_len(&mut self) -> u32 {
        let room = (self.cfg.max_threads / self.threads).clamp(1, self.cfg.max_loop_len);
        self.rng.random_range(1..=room)
    }

    /// Generates a body that runs `n` times per execution of its loop.
    fn nested<T>(&mut self, n: u32, f: impl FnOnce(&mut Self) -> T) -> T {
        let saved = self.threads;
        self.threads = self.threads.saturating_mul(n);
        let out = f(self);
        self.threads = saved;
        out
    }

    /// A loop-carried update `v := op(v, w)`.
    fn carried(&mut self) -> Cmd {
        let v = self.real_var();
        let w = if self.chance(0.5) {
            Expr::Var(self.real_var())
        } else {
            self.real_expr(1)
        };
        let cur = Expr::Var(v.clone());
        let e = match self.rng.random_range(0..3) {
            0 => Expr::prim(Prim::Add, vec![cur, w]),
            1 => Expr::prim(Prim::Sub, vec![w, cur]),
            _ => Expr::prim(Prim::Mul, vec![Expr::Real(0.5), Expr::prim(Prim::Add, vec![cur, w])]),
        };
        Cmd::Assign(v, e)
    }

    fn loop_body(&mut self, depth: u32) -> Cmd {
        self.loop_depth += 1;
        let mut body = self.block(depth);
        if self.cfg.data_dep && self.chance(0.7) {
            let extra = self.carried();
            body = if self.chance(0.5) {
                Cmd::seq([body, extra])
            } else {
                Cmd::seq([extra, body])
            };
        }
        self.loop_depth -= 1;
        body
    }

    pub fn cmd(&mut self, depth: u32) -> Cmd {
        if depth == 0 {
            return self.atomic();
        }
        let may_loop = self.cfg.nesting || self.loop_depth == 0;
        let target = self.cfg.tier == Tier::Target;
        match self.rng.random_range(0..100) {
            0..=29 => self.atomic(),
            30..=49 => self.block(depth - 1),
            50..=64 if self.cfg.ifz => {
                let z = self.int_expr(2);
                let a = self.block(depth - 1);
                let b = self.block(depth - 1);
                Cmd::ifz(z, a, b)
            }
            65..=79 if may_loop && target => self.target_loop(depth),
            85..=91 if may_loop && target => {
                let n = self.loop_len();
                Cmd::LoopFixpt(n, Box::new(self.nested(n, |g| g.loop_body(depth - 1))))
            }
            _ if may_loop => {
                let x = *COUNTERS.choose(self.rng).expect("non-empty");
                let n = self.loop_len();
                Cmd::For(x.into(), n, Box::new(self.nested(n, |g| g.loop_body(depth - 1))))
            }
            _ => self.atomic(),
        }
    }

    /// `extend_index` over the string for the current nesting depth, usually
    /// wrapping a shifting fixed-point loop.
    fn target_loop(&mut self, depth: u32) -> Cmd {
        let s: Name = format!("s{}", self.strings.len()).into();
        let n = self.loop_len();
        self.strings.push(s.clone());
        let saved = self.threads;
        self.threads = self.threads.saturating_mul(n);
        let body = if self.chance(0.75) {
            let m = self.loop_len();
            let inner = self.nested(m, |g| g.loop_body(depth - 1));
            let mut parts = vec![Cmd::Shift(s.clone())];
            if self.chance(0.7) {
                parts.push(Cmd::LookupIndex(self.int_var().name, s.clone()));
            }
            parts.push(inner);
            Cmd::LoopFixpt(m, Box::new(Cmd::seq(parts)))
        } else {
            self.loop_body(depth - 1)
        };
        self.threads = saved;
        self.strings.pop();
        Cmd::ExtendIndex(s, n, Box::new(body))
    }

    /// A top-level program in the configured tier.
    pub fn program(&mut self) -> Cmd {
        let depth = self.cfg.max_depth;
        match self.cfg.tier {
            Tier::Source => self.source_program(depth),
            Tier::Relaxed => {
                let c = self.source_program(depth);
                vectorise_relaxed(&c)
            }
            Tier::Target => {
                if self.chance(0.5) {
                    let mut src = Gen::new(self.rng, &self.cfg.with_tier(Tier::Source));
                    let c = src.source_program(depth);
                    vectorise(&c)
                } else {
                    let n = self.rng.random_range(1..=self.cfg.max_block);
                    Cmd::seq((0..n).map(|_| self.cmd(depth.saturating_sub(1))))
                }
            }
        }
    }

    /// Source programs always contain at least one loop.
    fn source_program(&mut self, depth: u32) -> Cmd {
        let n = self.rng.random_range(1..=self.cfg.max_block);
        let mut stmts: Vec<Cmd> = (0..n).map(|_| self.cmd(depth.saturating_sub(1))).collect();
        if !stmts.iter().any(contains_loop) && depth > 0 {
            let x = *COUNTERS.choose(self.rng).expect("non-empty");
            let len = self.loop_len();
            let body = self.nested(len, |g| g.loop_body(depth - 1));
            let k = self.rng.random_range(0..=stmts.len());
            stmts.insert(k, Cmd::For(x.into(), len, Box::new(body)));
        }
        Cmd::seq(stmts)
    }

    pub fn real_value(&mut self) -> f64 {
        if self.chance(0.5) {
            *REALS.choose(self.rng).expect("non-empty")
        } else {
            self.rng.random_range(-3.0..3.0)
        }
    }

    pub fn int_value(&mut self) -> i64 {
        self.rng.random_range(-3..=3)
    }
}

fn contains_loop(c: &Cmd) -> bool {
    let mut found = false;
    c.walk(&mut |n| found |= matches!(n, Cmd::For(..) | Cmd::ExtendIndex(..) | Cmd::ExtendedLoop(..)));
    found
}

/// A database with hashed standard-normal defaults and a few explicit entries.
pub fn random_db(rng: &mut impl Rng) -> Rdb {
    let mut d = Rdb::normal(rng.next_u64());
    for _ in 0..rng.random_range(0..4) {
        let s = *FETCH_STRINGS.choose(rng).expect("non-empty");
        let i = Index::new([(s, rng.random_range(0..6))]).expect("one pair");
        d.insert(i, rng.random_range(-2.0..2.0));
    }
    d
}

/// Initial scalar values for every variable of `c`.
pub fn random_src_state(rng: &mut impl Rng, c: &Cmd) -> SrcState {
    let mut g = Gen::new(rng, &GenConfig::default());
    let vals: BTreeMap<Var, Val> = c
        .vars()
        .into_iter()
        .map(|x| {
            let v = match x.ty {
                Ty::Int => Val::Int(g.int_value()),
                Ty::Real => Val::Real(g.real_value()),
            };
            (x, v)
        })
        .collect();
    SrcState::from_map(vals).expect("typed by construction")
}

/// A random antichain over the outer strings: empty, the root, one level of
/// `q`, or a mix of one- and two-level indices.
pub fn random_chain(rng: &mut impl Rng) -> AChain {
    let q = |k: i64| Index::new([(OUTER_STRINGS[0], k)]).expect("one pair");
    let qr = |k: i64, j: i64| Index::new([(OUTER_STRINGS[0], k), (OUTER_STRINGS[1], j)]).expect("two pairs");
    match rng.random_range(0..10) {
        0 => AChain::empty(),
        1..=3 => AChain::root(),
        4..=6 => {
            let n = rng.random_range(1..=4);
            AChain::new((0..n).filter(|_| rng.random_bool(0.8)).map(q)).expect("antichain")
        }
        _ => {
            let mut members = Vec::new();
            for k in 0..3 {
                match rng.random_range(0..3) {
                    0 => {}
                    1 => members.push(q(k)),
                    _ => {
                        for j in 0..rng.random_range(1..=3) {
                            members.push(qr(k, j));
                        }
                    }
                }
            }
            AChain::new(members).expect("antichain")
        }
    }
}

/// Every prefix of every member, plus the root.
pub fn down_set(a: &AChain) -> Vec<Index> {
    let mut out = std::collections::BTreeSet::from([Index::empty()]);
    for i in a {
        for k in 0..=i.len() {
            out.insert(i.prefix(k));
        }
    }
    out.into_iter().collect()
}

/// A target state over the variables of `c` whose cells hold `[]` and
/// random entries at indices in `L↓`.
pub fn random_tgt_state(rng: &mut impl Rng, c: &Cmd, l: &AChain) -> TgtState<Sparse> {
    let below = down_set(l);
    let mut g = Gen::new(rng, &GenConfig::default());
    let mut st = TgtState::new(Sparse);
    for x in c.vars() {
        let mut idx: Vec<&Index> = below.iter().filter(|i| !i.is_empty()).collect();
        idx.retain(|_| g.rng.random_bool(0.3));
        match x.ty {
            Ty::Int => {
                let mut m = PMap::constant(g.int_value());
                for i in idx {
                    m.insert(i.clone(), g.int_value());
                }
                st.set_int(&x, &m).expect("rooted");
            }
            Ty::Real => {
                let mut m = PMap::constant(g.real_value());
                for i in idx {
                    m.insert(i.clone(), g.real_value());
                }
                st.set_real(&x, &m).expect("rooted");
            }
        }
    }
    st
}

/// Program, database and source state for one attempt.
pub fn gen_source_case(cfg: &GenConfig, attempt: u64) -> (Cmd, Rdb, SrcState) {
    let mut rng = rng_for(cfg.seed, attempt);
    let c = Gen::new(&mut rng, &cfg.with_tier(Tier::Source)).program();
    let d = random_db(&mut rng);
    let s = random_src_state(&mut rng, &c);
    (c, d, s)
}

/// Program, database, state and antichain for one attempt.
pub fn gen_target_case(cfg: &GenConfig, attempt: u64) -> (Cmd, Rdb, TgtState<Sparse>, AChain) {
    let mut rng = rng_for(cfg.seed, attempt);
    let c = Gen::new(&mut rng, &cfg.with_tier(Tier::Target)).program();
    let d = random_db(&mut rng);
    let a = random_chain(&mut rng);
    let s = random_tgt_state(&mut rng, &c, &a);
    (c, d, s, a)
}

/// Generates a program in `cfg.tier` from `cfg.seed`.
pub fn gen_program(cfg: &GenConfig) -> Cmd {
    let mut rng = rng_for(cfg.seed, 0);
    Gen::new(&mut rng, cfg).program()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use crate::print::print;

    #[test]
    fn deterministic() {
        let cfg = GenConfig::default().with_seed(42);
        assert_eq!(gen_program(&cfg), gen_program(&cfg));
        assert_ne!(gen_program(&cfg), gen_program(&cfg.with_seed(43)));
    }

    #[test]
    fn depth_zero_is_atomic() {
        let cfg = GenConfig {
            max_depth: 0,
            seed: 1,
            ..GenConfig::default()
        };
        let c = gen_program(&cfg);
        let stmts = match &c {
            Cmd::Seq(cs) => cs.clone(),
            c => vec![c.clone()],
        };
        assert!(stmts.iter().all(|c| c.size() == 1), "{}", print(&c));
    }

    #[test]
    fn programs_validate_in_every_tier() {
        for tier in [Tier::Source, Tier::Target, Tier::Relaxed] {
            for seed in 0..200 {
                let cfg = GenConfig::default().with_seed(seed).with_tier(tier);
                let c = gen_program(&cfg);
                c.validate(tier).unwrap_or_else(|e| panic!("{e}\n{}", print(&c)));
                assert_eq!(parse(&print(&c), tier).unwrap(), c);
            }
        }
    }
}
