//! Benchmark programs and their fixed-point round counts.

use std::time::Instant;

use serde::Serialize;

use crate::ast::{Cmd, Tier};
use crate::error::{Error, Result};
use crate::harness::oracle::{check_soundness_with, Outcome};
use crate::index::AChain;
use crate::parse::parse;
use crate::rdb::Rdb;
use crate::source::SrcState;
use crate::state::{Dense, Sparse, TgtState};
use crate::target::{run_tgt, Mode};
use crate::vectorise::vectorise;

/// Seed of the database the benches read from.
pub const BENCH_DB_SEED: u64 = 2024;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub suite: &'static str,
    pub params: Vec<(&'static str, u32)>,
    /// Rounds executed by the outermost fixed-point loop.
    pub rounds: u32,
    /// Rounds the same loop runs when unrolled.
    pub unrolled_rounds: u32,
    /// The vectorised program agrees with the source program.
    pub agree: bool,
    pub sparse_ms: f64,
    pub dense_ms: f64,
}

/// `y_t ~ N(y_{t-1} + … + y_{t-K}, 1)`: the last `K` values rotate through
/// `p1 … pK`.
pub fn arm_program(n: u32, k: u32) -> Result<Cmd> {
    if k < 1 || k > n {
        return Err(Error::Invalid(format!("arm needs 1 <= K <= N, got N={n} K={k}")));
    }
    let mut sum = "p1".to_string();
    for j in 2..=k {
        sum = format!("add({sum}, p{j})");
    }
    let mut rotate = String::new();
    for j in (2..=k).rev() {
        rotate.push_str(&format!("p{j} := p{};\n", j - 1));
    }
    let text = format!(
        r#"for t:int in range({n}) {{
  y := fetch([("y", t:int)]);
  score(normal_logpdf(y, {sum}, 1.0));
  {rotate}p1 := y
}}"#
    );
    parse(&text, Tier::Source)
}

/// Hidden Markov model whose latent step depends on the previous `order` states.
pub fn hmm_program(t: u32, order: u32) -> Result<Cmd> {
    let text = match order {
        1 => format!(
            r#"for t:int in range({t}) {{
  x := fetch([("z", t:int)]);
  score(normal_logpdf(x, y, 1.0));
  score(normal_logpdf(o, x, 1.0));
  y := x
}}"#
        ),
        2 => format!(
            r#"for t:int in range({t}) {{
  x := fetch([("z", t:int)]);
  score(normal_logpdf(x, add(mul(0.5, y1), mul(0.3, y2)), 1.0));
  score(normal_logpdf(o, x, 1.0));
  y2 := y1;
  y1 := x
}}"#
        ),
        _ => return Err(Error::Invalid(format!("hmm order must be 1 or 2, got {order}"))),
    };
    if t < 2 {
        return Err(Error::Invalid(format!("hmm needs T >= 2, got {t}")));
    }
    parse(&text, Tier::Source)
}

/// A state-space model with `S` latent dimensions whose transition switches on
/// the sign of a fetched control input.
pub fn tcm_program(s: u32, t: u32) -> Result<Cmd> {
    if s < 1 || t < 1 {
        return Err(Error::Invalid(format!("tcm needs S, T >= 1, got S={s} T={t}")));
    }
    let mut fetches = String::new();
    let mut up = String::new();
    let mut down = String::new();
    let mut carry = String::new();
    for d in 0..s {
        fetches.push_str(&format!("  x{d} := fetch([(\"z\", t:int); (\"dim\", {d})]);\n"));
        up.push_str(&format!("    score(normal_logpdf(x{d}, add(p{d}, u), 1.0));\n"));
        down.push_str(&format!("    score(normal_logpdf(x{d}, sub(mul(0.5, p{d}), u), 0.5));\n"));
        carry.push_str(&format!("  p{d} := x{d};\n"));
    }
    let text = format!(
        r#"for t:int in range({t}) {{
  u := fetch([("u", t:int)]);
  k:int := lt(u, 0.0);
{fetches}  ifz k:int {{
{up}    skip
  }} else {{
{down}    skip
  }};
{carry}  skip
}}"#
    );
    parse(&text, Tier::Source)
}

fn measure(suite: &'static str, params: Vec<(&'static str, u32)>, c: &Cmd, db: &Rdb) -> Result<BenchResult> {
    let s0 = SrcState::new();
    let agree = check_soundness_with(c, db, &s0, None) == Outcome::Pass;
    let tc = vectorise(c);
    let sigma = TgtState::from_scalars(Sparse, s0.as_map());
    let a = AChain::root();
    let start = Instant::now();
    let fix = run_tgt(&tc, db, &sigma, &a, Mode::Fixpoint)?;
    let sparse_ms = start.elapsed().as_secs_f64() * 1e3;
    let unrolled = run_tgt(&tc, db, &sigma, &a, Mode::Unrolled)?;
    let dense_sigma = sigma.rebase(Dense::for_program(&tc)?)?;
    let start = Instant::now();
    let dense = run_tgt(&tc, db, &dense_sigma, &a, Mode::Fixpoint)?;
    let dense_ms = start.elapsed().as_secs_f64() * 1e3;
    let first = |t: &crate::target::Trace| t.sites.first().map_or(0, |s| s.max_rounds);
    Ok(BenchResult {
        suite,
        params,
        rounds: first(&fix.trace),
        unrolled_rounds: first(&unrolled.trace),
        agree: agree && dense.trace == fix.trace && dense.score.same_entries(&fix.score),
        sparse_ms,
        dense_ms,
    })
}

pub fn bench_arm(n: u32, k: u32) -> Result<BenchResult> {
    let c = arm_program(n, k)?;
    measure("arm", vec![("N", n), ("K", k)], &c, &Rdb::normal(BENCH_DB_SEED))
}

pub fn bench_hmm(t: u32, order: u32) -> Result<BenchResult> {
    let c = hmm_program(t, order)?;
    measure("hmm", vec![("T", t), ("order", order)], &c, &Rdb::normal(BENCH_DB_SEED))
}

pub fn bench_tcm_like(s: u32, t: u32) -> Result<BenchResult> {
    let c = tcm_program(s, t)?;
    measure("tcm", vec![("S", s), ("T", t)], &c, &Rdb::normal(BENCH_DB_SEED))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arm_rounds() {
        for (n, k, want) in [(20, 1, 2), (20, 3, 4), (10, 10, 10)] {
            let r = bench_arm(n, k).unwrap();
            assert_eq!(r.rounds, want, "N={n} K={k}");
            assert!(r.agree);
            assert_eq!(r.unrolled_rounds, n);
        }
    }

    #[test]
    fn hmm_rounds() {
        assert_eq!(bench_hmm(10, 1).unwrap().rounds, 2);
        assert_eq!(bench_hmm(10, 2).unwrap().rounds, 3);
        assert!(bench_hmm(3, 1).unwrap().agree);
    }

    #[test]
    fn tcm_rounds() {
        let r = bench_tcm_like(2, 10).unwrap();
        assert_eq!((r.rounds, r.agree), (2, true));
        assert_eq!(bench_tcm_like(1, 1).unwrap().rounds, 1);
    }

    #[test]
    fn preconditions() {
        assert!(arm_program(3, 4).is_err());
        assert!(arm_program(3, 0).is_err());
        assert!(hmm_program(10, 3).is_err());
        assert!(hmm_program(1, 1).is_err());
        assert!(tcm_program(0, 3).is_err());
    }
}
