//! Differential oracles. Each one runs a program through two interpreters that
//! must agree and reports the first disagreement it finds.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::gen::{gen_source_case, gen_target_case, rng_for, GenConfig, OUTER_STRINGS};
use super::shrink::shrink;
use crate::ast::{Cmd, Tier, Var};
use crate::error::{Error, Result};
use crate::index::{AChain, Index, Name};
use crate::pmap::Tensor;
use crate::print::print;
use crate::rdb::Rdb;
use crate::relaxed::run_relaxed;
use crate::source::{run_src, SrcState};
use crate::state::{Dense, Sparse, Store, TgtState};
use crate::target::{run_tgt_with, Mode, Mutant, TgtConfig, Trace};
use crate::vectorise::{embed, vectorise, vectorise_relaxed};

/// Relative score tolerance between the source and target interpreters.
pub const SCORE_TOL: f64 = 1e-9;
/// Random extensions added to the probe set.
pub const PROBE_EXTENSIONS: usize = 64;
/// The interpreter-mode oracle probes more widely.
pub const INTFIX_EXTENSIONS: usize = 128;
/// Generation attempts per seed before giving up on finding a valid case.
pub const MAX_ATTEMPTS: u64 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Oracle {
    Embedding,
    Soundness,
    IntFix,
    Relaxed,
    Backends,
}

impl Oracle {
    pub const ALL: [Oracle; 5] = [
        Oracle::Embedding,
        Oracle::Soundness,
        Oracle::IntFix,
        Oracle::Relaxed,
        Oracle::Backends,
    ];

    /// Tier of the programs this oracle is fed.
    pub fn input_tier(self) -> Tier {
        match self {
            Oracle::IntFix | Oracle::Backends => Tier::Target,
            _ => Tier::Source,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Oracle::Embedding => "embedding",
            Oracle::Soundness => "soundness",
            Oracle::IntFix => "intfix",
            Oracle::Relaxed => "relaxed",
            Oracle::Backends => "backends",
        }
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Oracle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Oracle::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown oracle {s:?}")))
    }
}

/// Inputs for one check.
#[derive(Clone, Debug)]
pub enum Case {
    Source { db: Rdb, state: SrcState },
    Target { db: Rdb, state: TgtState<Sparse>, chain: AChain },
}

impl Case {
    pub fn digest(&self, c: &Cmd) -> String {
        let mut h = Sha256::new();
        h.update(print(c).as_bytes());
        match self {
            Case::Source { db, state } => {
                h.update(db.to_json().as_bytes());
                for (x, v) in state.vars() {
                    h.update(format!("{x}={v};").as_bytes());
                }
            }
            Case::Target { db, state, chain } => {
                h.update(db.to_json().as_bytes());
                h.update(state.render().as_bytes());
                h.update(format!("{chain:?}").as_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Pass,
    Fail(String),
    /// The reference run itself failed, so the inputs say nothing.
    Invalid(String),
}

impl Outcome {
    pub fn is_fail(&self) -> bool {
        matches!(self, Outcome::Fail(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Invalid,
}

/// The first point where two runs part ways.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Path of the first top-level statement after which the runs disagree.
    pub judgment: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub oracle: Oracle,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<GenConfig>,
    pub attempt: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutant: Option<Mutant>,
    pub program: String,
    pub inputs_digest: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shrunk_program: Option<String>,
    pub shrink_steps: usize,
}

fn within_tol(a: f64, b: f64) -> bool {
    (a - b).abs() <= SCORE_TOL * a.abs().max(1.0) || a.to_bits() == b.to_bits()
}

fn tensors_equal(a: &Tensor, b: &Tensor) -> Option<String> {
    if a.same_entries(b) {
        None
    } else {
        Some(format!("score tensors differ: {a:?} vs {b:?}"))
    }
}

/// Probe indices: every stored index of either state, the antichain, and
/// random extensions of those.
pub fn probes<S: Store, T: Store>(
    s1: &TgtState<S>,
    s2: &TgtState<T>,
    a: &AChain,
    strings: &BTreeSet<Name>,
    extensions: usize,
    rng: &mut impl Rng,
) -> Vec<Index> {
    let mut set: BTreeSet<Index> = s1.domain_indices();
    set.extend(s2.domain_indices());
    set.extend(a.iter().cloned());
    set.insert(Index::empty());
    let base: Vec<Index> = set.iter().cloned().collect();
    let mut pool: Vec<Name> = strings.iter().cloned().collect();
    pool.extend(OUTER_STRINGS.iter().map(|s| Name::from(*s)));
    pool.push("p".into());
    for _ in 0..extensions {
        let mut i = base.choose(rng).cloned().unwrap_or_else(Index::empty);
        for _ in 0..rng.random_range(1..=3) {
            let s = pool.choose(rng).expect("non-empty").clone();
            if !i.binds(&s) {
                i = i.extended(s, rng.random_range(0..6)).expect("unbound string");
            }
        }
        set.insert(i);
    }
    set.into_iter().collect()
}

fn first_state_diff<S: Store, T: Store>(
    s1: &TgtState<S>,
    s2: &TgtState<T>,
    vars: &BTreeSet<Var>,
    probes: &[Index],
) -> Option<String> {
    for x in vars {
        for i in probes {
            let (a, b) = (s1.read(x, i), s2.read(x, i));
            if !a.same(b) {
                return Some(format!("{x} at {i}: {a} vs {b}"));
            }
        }
    }
    None
}

fn vars_of<S: Store, T: Store>(s1: &TgtState<S>, s2: &TgtState<T>) -> BTreeSet<Var> {
    s1.vars().chain(s2.vars()).cloned().collect()
}

fn mutant_cfg(mode: Mode, mutant: Option<Mutant>) -> TgtConfig {
    TgtConfig {
        mode,
        mutant,
        ..TgtConfig::default()
    }
}

/// Source run against a lifted target run under `{[]}`.
fn check_lifted(tc: &Cmd, c: &Cmd, db: &Rdb, s0: &SrcState, cfg: TgtConfig) -> Outcome {
    let (s0_out, r) = match run_src(c, db, s0) {
        Ok(v) => v,
        Err(e) => return Outcome::Invalid(e.to_string()),
    };
    let s1 = TgtState::from_scalars(Sparse, s0.as_map());
    let out = match run_tgt_with(tc, db, &s1, &AChain::root(), cfg) {
        Ok(o) => o,
        Err(e) => return Outcome::Fail(format!("target run failed: {e}")),
    };
    let root = Index::empty();
    let dom: Vec<&Index> = out.score.domain().collect();
    if dom != [&root] {
        return Outcome::Fail(format!("score tensor domain is {dom:?}, not [[]]"));
    }
    let t = out.score.get(root.pairs()).expect("checked");
    if !within_tol(r, t) {
        return Outcome::Fail(format!("score {r} vs {t}"));
    }
    let mut vars: BTreeSet<Var> = s0_out.vars().map(|(x, _)| x.clone()).collect();
    vars.extend(out.state.vars().cloned());
    for x in &vars {
        let (a, b) = (s0_out.get(x), out.state.read(x, &root));
        if !a.same(b) {
            return Outcome::Fail(format!("{x} at []: {a} vs {b}"));
        }
    }
    Outcome::Pass
}

pub fn check_embedding_with(c: &Cmd, db: &Rdb, s0: &SrcState, mutant: Option<Mutant>) -> Outcome {
    check_lifted(&embed(c), c, db, s0, mutant_cfg(Mode::Unrolled, mutant))
}

pub fn check_soundness_with(c: &Cmd, db: &Rdb, s0: &SrcState, mutant: Option<Mutant>) -> Outcome {
    check_lifted(&vectorise(c), c, db, s0, mutant_cfg(Mode::Fixpoint, mutant))
}

pub fn check_int_vs_fixpoint_with(
    c: &Cmd,
    db: &Rdb,
    s: &TgtState<Sparse>,
    a: &AChain,
    mutant: Option<Mutant>,
) -> Outcome {
    let unrolled = match run_tgt_with(c, db, s, a, TgtConfig::mode(Mode::Unrolled)) {
        Ok(o) => o,
        Err(e) => return Outcome::Invalid(e.to_string()),
    };
    let fix = match run_tgt_with(c, db, s, a, mutant_cfg(Mode::Fixpoint, mutant)) {
        Ok(o) => o,
        Err(e) => return Outcome::Fail(format!("fixpoint run failed: {e}")),
    };
    if let Some(d) = tensors_equal(&unrolled.score, &fix.score) {
        return Outcome::Fail(d);
    }
    let mut rng = rng_for(0x1f1f, 0);
    let p = probes(&unrolled.state, &fix.state, a, &c.strings(), INTFIX_EXTENSIONS, &mut rng);
    if let Some(d) = first_state_diff(&unrolled.state, &fix.state, &vars_of(&unrolled.state, &fix.state), &p) {
        return Outcome::Fail(d);
    }
    if let Some(d) = rounds_exceed(&fix.trace, &unrolled.trace) {
        return Outcome::Fail(d);
    }
    Outcome::Pass
}

/// Describes the first site where `fewer` ran more rounds than `more`.
fn rounds_exceed(fewer: &Trace, more: &Trace) -> Option<String> {
    if fewer.sites.len() != more.sites.len() {
        return Some(format!("{} loop sites vs {}", fewer.sites.len(), more.sites.len()));
    }
    fewer.sites.iter().zip(&more.sites).enumerate().find_map(|(k, (f, m))| {
        (f.total_rounds > m.total_rounds || f.max_rounds > m.max_rounds).then(|| {
            format!(
                "loop site {k}: {} rounds (max {}) vs {} (max {})",
                f.total_rounds, f.max_rounds, m.total_rounds, m.max_rounds
            )
        })
    })
}

pub fn check_relaxed_with(c: &Cmd, db: &Rdb, s0: &SrcState, mutant: Option<Mutant>) -> Outcome {
    if let Err(e) = run_src(c, db, s0) {
        return Outcome::Invalid(e.to_string());
    }
    let s1 = TgtState::from_scalars(Sparse, s0.as_map());
    let a = AChain::root();
    let plain = match run_tgt_with(&vectorise(c), db, &s1, &a, mutant_cfg(Mode::Fixpoint, mutant)) {
        Ok(o) => o,
        Err(e) => return Outcome::Fail(format!("target run failed: {e}")),
    };
    let rc = vectorise_relaxed(c);
    let relaxed = match run_relaxed(&rc, db, &s1, &a) {
        Ok(o) => o,
        Err(e) => return Outcome::Fail(format!("relaxed run failed: {e}")),
    };
    if let Some(d) = tensors_equal(&relaxed.score, &plain.score) {
        return Outcome::Fail(d);
    }
    let mut rng = rng_for(0x2e2e, 0);
    let p = probes(&relaxed.state, &plain.state, &a, &rc.strings(), PROBE_EXTENSIONS, &mut rng);
    if let Some(d) = first_state_diff(&relaxed.state, &plain.state, &vars_of(&relaxed.state, &plain.state), &p) {
        return Outcome::Fail(d);
    }
    if let Some(d) = rounds_exceed(&relaxed.trace, &plain.trace) {
        return Outcome::Fail(d);
    }
    Outcome::Pass
}

pub fn check_backends_with(
    c: &Cmd,
    db: &Rdb,
    s: &TgtState<Sparse>,
    a: &AChain,
    mutant: Option<Mutant>,
) -> Outcome {
    let outer: Vec<Name> = OUTER_STRINGS.iter().map(|s| Name::from(*s)).collect();
    let dense = match Dense::for_program_under(c, &outer).and_then(|d| s.rebase(d)) {
        Ok(d) => d,
        Err(e) => return Outcome::Invalid(e.to_string()),
    };
    let sparse_out = run_tgt_with(c, db, s, a, TgtConfig::default());
    let dense_out = run_tgt_with(c, db, &dense, a, mutant_cfg(Mode::Fixpoint, mutant));
    let (so, d) = match (sparse_out, dense_out) {
        (Err(e), _) if e.is_static() => return Outcome::Invalid(e.to_string()),
        (Ok(so), Ok(d)) => (so, d),
        (Err(e1), Err(e2)) if e1.kind() == e2.kind() => return Outcome::Pass,
        (Err(e1), Err(e2)) => return Outcome::Fail(format!("errors differ: {e1} vs {e2}")),
        (Ok(_), Err(e)) => return Outcome::Fail(format!("dense run failed: {e}")),
        (Err(e), Ok(_)) => return Outcome::Fail(format!("sparse run failed: {e}")),
    };
    if let Some(d) = tensors_equal(&so.score, &d.score) {
        return Outcome::Fail(d);
    }
    let (cs, cd) = (so.state.canonical(), d.state.canonical());
    let keys: BTreeSet<&Var> = cs.keys().chain(cd.keys()).collect();
    for x in keys {
        match (cs.get(x), cd.get(x)) {
            (Some(u), Some(v)) if u.same(v) => {}
            (u, v) => return Outcome::Fail(format!("{x}: sparse {u:?} vs dense {v:?}")),
        }
    }
    if so.trace != d.trace {
        return Outcome::Fail(format!("traces differ: {:?} vs {:?}", so.trace, d.trace));
    }
    Outcome::Pass
}

/// Runs one oracle on a program and its inputs.
pub fn check_case(oracle: Oracle, c: &Cmd, case: &Case, mutant: Option<Mutant>) -> Outcome {
    match (oracle, case) {
        (Oracle::Embedding, Case::Source { db, state }) => check_embedding_with(c, db, state, mutant),
        (Oracle::Soundness, Case::Source { db, state }) => check_soundness_with(c, db, state, mutant),
        (Oracle::Relaxed, Case::Source { db, state }) => check_relaxed_with(c, db, state, mutant),
        (Oracle::IntFix, Case::Target { db, state, chain }) => check_int_vs_fixpoint_with(c, db, state, chain, mutant),
        (Oracle::Backends, Case::Target { db, state, chain }) => check_backends_with(c, db, state, chain, mutant),
        (o, _) => Outcome::Invalid(format!("oracle {o} needs {} inputs", o.input_tier())),
    }
}

/// Smallest top-level prefix of `c` on which the check already fails.
fn first_divergence(oracle: Oracle, c: &Cmd, case: &Case, mutant: Option<Mutant>) -> Option<Counterexample> {
    let stmts = match c {
        Cmd::Seq(cs) => cs.clone(),
        c => vec![c.clone()],
    };
    for k in 1..=stmts.len() {
        let prefix = Cmd::seq(stmts[..k].iter().cloned());
        if let Outcome::Fail(detail) = check_case(oracle, &prefix, case, mutant) {
            let judgment = if stmts.len() == 1 { String::new() } else { format!("seq[{}]", k - 1) };
            return Some(Counterexample { judgment, detail });
        }
    }
    None
}

fn report(oracle: Oracle, c: &Cmd, case: &Case, mutant: Option<Mutant>, outcome: &Outcome) -> CheckReport {
    let (verdict, counterexample) = match outcome {
        Outcome::Pass => (Verdict::Pass, None),
        Outcome::Invalid(d) => (
            Verdict::Invalid,
            Some(Counterexample {
                judgment: String::new(),
                detail: d.clone(),
            }),
        ),
        Outcome::Fail(d) => {
            let cx = first_divergence(oracle, c, case, mutant).unwrap_or(Counterexample {
                judgment: String::new(),
                detail: d.clone(),
            });
            (Verdict::Fail, Some(cx))
        }
    };
    CheckReport {
        oracle,
        seed: None,
        config: None,
        attempt: 0,
        mutant,
        program: print(c),
        inputs_digest: case.digest(c),
        verdict,
        counterexample,
        shrunk_program: None,
        shrink_steps: 0,
    }
}

pub fn check_embedding(c: &Cmd, db: &Rdb, s0: &SrcState) -> CheckReport {
    let case = Case::Source {
        db: db.clone(),
        state: s0.clone(),
    };
    report(Oracle::Embedding, c, &case, None, &check_embedding_with(c, db, s0, None))
}

pub fn check_soundness(c: &Cmd, db: &Rdb, s0: &SrcState) -> CheckReport {
    let case = Case::Source {
        db: db.clone(),
        state: s0.clone(),
    };
    report(Oracle::Soundness, c, &case, None, &check_soundness_with(c, db, s0, None))
}

pub fn check_relaxed(c: &Cmd, db: &Rdb, s0: &SrcState) -> CheckReport {
    let case = Case::Source {
        db: db.clone(),
        state: s0.clone(),
    };
    report(Oracle::Relaxed, c, &case, None, &check_relaxed_with(c, db, s0, None))
}

pub fn check_int_vs_fixpoint(c: &Cmd, db: &Rdb, s: &TgtState<Sparse>, a: &AChain) -> CheckReport {
    let case = Case::Target {
        db: db.clone(),
        state: s.clone(),
        chain: a.clone(),
    };
    report(Oracle::IntFix, c, &case, None, &check_int_vs_fixpoint_with(c, db, s, a, None))
}

pub fn check_backends(c: &Cmd, db: &Rdb, s: &TgtState<Sparse>, a: &AChain) -> CheckReport {
    let case = Case::Target {
        db: db.clone(),
        state: s.clone(),
        chain: a.clone(),
    };
    report(Oracle::Backends, c, &case, None, &check_backends_with(c, db, s, a, None))
}

/// The generated case for one attempt of a seed.
pub fn gen_case(oracle: Oracle, cfg: &GenConfig, attempt: u64) -> (Cmd, Case) {
    match oracle.input_tier() {
        Tier::Target => {
            let (c, db, state, chain) = gen_target_case(cfg, attempt);
            (c, Case::Target { db, state, chain })
        }
        _ => {
            let (c, db, state) = gen_source_case(cfg, attempt);
            (c, Case::Source { db, state })
        }
    }
}

/// Generates a valid case from `cfg.seed`, checks it, and shrinks on failure.
/// Everything in the report follows from `(oracle, cfg, mutant)`.
pub fn fuzz_one(oracle: Oracle, cfg: &GenConfig, mutant: Option<Mutant>) -> CheckReport {
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let (c, case) = gen_case(oracle, cfg, attempt);
        let outcome = check_case(oracle, &c, &case, mutant);
        let invalid = matches!(outcome, Outcome::Invalid(_));
        let mut r = report(oracle, &c, &case, mutant, &outcome);
        r.seed = Some(cfg.seed);
        r.config = Some(cfg.clone());
        r.attempt = attempt;
        if outcome.is_fail() {
            let (small, steps) = shrink(&c, |p| check_case(oracle, p, &case, mutant).is_fail());
            r.shrunk_program = Some(print(&small));
            r.shrink_steps = steps;
        }
        if !invalid {
            return r;
        }
        last = Some(r);
    }
    last.expect("at least one attempt")
}

/// Re-runs a report's check from its seed and configuration alone.
pub fn replay(r: &CheckReport) -> Result<CheckReport> {
    let cfg = r
        .config
        .as_ref()
        .ok_or_else(|| Error::Invalid("report has no generator configuration".into()))?;
    let seed = r.seed.ok_or_else(|| Error::Invalid("report has no seed".into()))?;
    Ok(fuzz_one(r.oracle, &cfg.with_seed(seed), r.mutant))
}
