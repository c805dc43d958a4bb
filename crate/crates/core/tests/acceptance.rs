//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::{Duration, Instant};

use vecloop_core::bench::{bench_arm, bench_hmm, bench_tcm_like, hmm_program};
use vecloop_core::harness::oracle::{check_case, gen_case};
use vecloop_core::harness::{check_law, fuzz_one, replay, GenConfig, Law, Oracle, Verdict};
use vecloop_core::index::idx;
use vecloop_core::parse::parse;
use vecloop_core::{
    run_src, run_tgt, vectorise, AChain, Axes, DenseMap, Index, IndexInj, Mode, Mutant, PMap, Rdb, Sparse, SrcState,
    TgtState,
};

type Check = Result<String, String>;

fn fuzz_many(oracle: Oracle, n: u64) -> Check {
    let mut invalid = 0;
    for seed in 0..n {
        let r = fuzz_one(oracle, &GenConfig::default().with_seed(seed), None);
        match r.verdict {
            Verdict::Pass => {}
            Verdict::Invalid => invalid += 1,
            Verdict::Fail => {
                return Err(format!("seed {seed}: {:?}\n{}", r.counterexample, r.program));
            }
        }
    }
    if invalid * 10 > n {
        return Err(format!("{invalid} of {n} seeds produced no valid case"));
    }
    Ok(format!("{n} programs, {invalid} without a valid case"))
}

fn within(limit: Duration, start: Instant, r: Check) -> Check {
    let t = start.elapsed();
    let msg = r?;
    if t > limit {
        Err(format!("{msg}; took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
    } else {
        Ok(format!("{msg}; {:.1}s", t.as_secs_f64()))
    }
}

fn c1_soundness() -> Check {
    let start = Instant::now();
    within(Duration::from_secs(120), start, fuzz_many(Oracle::Soundness, 1000))
}

fn c2_intfix() -> Check {
    let start = Instant::now();
    within(Duration::from_secs(120), start, fuzz_many(Oracle::IntFix, 1000))
}

fn c3_relaxed() -> Check {
    let start = Instant::now();
    within(Duration::from_secs(120), start, fuzz_many(Oracle::Relaxed, 500))
}

fn c4_rounds() -> Check {
    let start = Instant::now();
    let r = || -> Check {
        for k in [1u32, 3, 5, 10] {
            for n in [10u32, 20, 100] {
                let b = bench_arm(n, k).map_err(|e| e.to_string())?;
                if b.rounds != (k + 1).min(n) || !b.agree {
                    return Err(format!("arm N={n} K={k}: {} rounds, agree={}", b.rounds, b.agree));
                }
            }
        }
        for (order, want) in [(1, 2), (2, 3)] {
            let b = bench_hmm(10, order).map_err(|e| e.to_string())?;
            if b.rounds != want || !b.agree {
                return Err(format!("hmm order {order}: {} rounds, agree={}", b.rounds, b.agree));
            }
        }
        let b = bench_tcm_like(2, 10).map_err(|e| e.to_string())?;
        if b.rounds != 2 || !b.agree {
            return Err(format!("tcm: {} rounds, agree={}", b.rounds, b.agree));
        }
        hmm_fixture()?;
        Ok("arm 12 grid points, hmm orders 1 and 2, tcm, hmm fixture".into())
    };
    within(Duration::from_secs(30), start, r())
}

/// Three steps with observations 0.0, 0.1, 0.2 and `o = 0`.
fn hmm_fixture() -> Result<(), String> {
    let c = hmm_program(3, 1).map_err(|e| e.to_string())?;
    let mut db = Rdb::constant(0.0);
    for l in 0..3 {
        db.insert(idx(&[("z", l)]), 0.1 * l as f64);
    }
    let (_, score) = run_src(&c, &db, &SrcState::new()).map_err(|e| e.to_string())?;
    let want = 6.0 * (-0.5 * (2.0 * std::f64::consts::PI).ln()) - 0.035;
    if (score - want).abs() > 1e-12 {
        return Err(format!("hmm fixture score {score}, want {want}"));
    }
    let tc = vectorise(&c);
    let s = TgtState::new(Sparse);
    for (mode, want) in [(Mode::Fixpoint, 2), (Mode::Unrolled, 3)] {
        let o = run_tgt(&tc, &db, &s, &AChain::root(), mode).map_err(|e| e.to_string())?;
        if o.trace.sites[0].max_rounds != want {
            return Err(format!("hmm fixture {mode:?}: {} rounds", o.trace.sites[0].max_rounds));
        }
        if (o.score.total() - score).abs() > 1e-12 {
            return Err(format!("hmm fixture {mode:?} score {}", o.score.total()));
        }
    }
    Ok(())
}

fn c5_update_copy_figure() -> Check {
    let rv = |l: i64| idx(&[("rv", l)]);
    let root = Index::empty();
    let sigma = PMap::from_entries([(root.clone(), 1i64), (rv(1), 3), (rv(2), 4)]);
    let cases: [(&str, PMap<i64>, PMap<i64>); 4] = [
        ("update T1", sigma.update(&PMap::constant(6)), PMap::constant(6)),
        (
            "update T2",
            sigma.update(&PMap::from_entries([(rv(0), 8), (rv(2), 9)])),
            PMap::from_entries([(root.clone(), 1), (rv(0), 8), (rv(1), 3), (rv(2), 9)]),
        ),
        (
            "copy rho1",
            sigma.copy(&IndexInj::new([(root.clone(), rv(0)), (rv(0), rv(1)), (rv(1), rv(2))]).unwrap()),
            PMap::from_entries([(root.clone(), 1), (rv(0), 1), (rv(2), 3)]),
        ),
        ("copy rho2", sigma.copy(&IndexInj::new([(rv(2), root.clone())]).unwrap()), PMap::constant(4)),
    ];
    for (name, got, want) in cases {
        if !got.same_entries(&want) {
            return Err(format!("{name}: got {got:?}, want {want:?}"));
        }
    }
    if sigma.extend(rv(0).pairs()) != Some(1) || PMap::constant(6i64).extend(rv(2).pairs()) != Some(6) {
        return Err("extend examples".into());
    }
    Ok("four panels and both extend examples exact".into())
}

fn c6_dense_grid() -> Check {
    let (a, b) = ("alpha", "beta");
    let av = -1.0;
    let bv = |i: i64| 100.0 + i as f64;
    let cv = |i: i64, j: i64| 1000.0 + 10.0 * i as f64 + j as f64;
    let mut m = PMap::constant(av);
    for i in 0..=9 {
        m.insert(idx(&[(a, i)]), bv(i));
        for j in 0..=8 {
            m.insert(idx(&[(a, i), (b, j)]), cv(i, j));
        }
    }
    let axes = Axes::new(vec![a.into(), b.into()]).map_err(|e| e.to_string())?;
    let d = DenseMap::encode(&m, &axes).map_err(|e| e.to_string())?;
    if d.shape() != [11, 10] {
        return Err(format!("shape {:?}", d.shape()));
    }
    let mut cells = 0;
    for i in -1..=9 {
        for j in -1..=8 {
            let want_class = match (i >= 0, j >= 0) {
                (false, _) => av,
                (true, false) => bv(i),
                (true, true) => cv(i, j),
            };
            let mut pairs = Vec::new();
            if i >= 0 {
                pairs.push((a, i));
            }
            if j >= 0 {
                pairs.push((b, j));
            }
            let at = idx(&pairs);
            let got = d.cell(&[i, j]);
            if got != Some(want_class) || got != m.extend(at.pairs()) || d.decode(at.pairs()) != got {
                return Err(format!("cell [{i},{j}]: {got:?}, want {want_class}"));
            }
            cells += 1;
        }
    }
    if !d.to_pmap().same_function(&m) {
        return Err("decode differs from the sparse map".into());
    }
    Ok(format!("shape (11,10), {cells} cells match"))
}

/// The laws named by criterion 7. `relaxed_cmd` and `flag_domain` are
/// checked in the property suite.
const CRITERION_7_LAWS: [Law; 9] = [
    Law::UpdateExtend,
    Law::CopyExtend,
    Law::WriteLocality,
    Law::LStateUpdate,
    Law::EmptyIdentity,
    Law::ScoreDomain,
    Law::LStatePreservation,
    Law::IfzInterchange,
    Law::RelaxedExpr,
];

fn c7_laws() -> Check {
    let start = Instant::now();
    let r = || -> Check {
        for law in CRITERION_7_LAWS {
            let r = check_law(law, 500, 7);
            if !r.ok() || r.passed != 500 {
                return Err(format!("{law}: {r:?}"));
            }
        }
        Ok(format!("{} laws x 500 trials", CRITERION_7_LAWS.len()))
    };
    within(Duration::from_secs(60), start, r())
}

fn c8_backends() -> Check {
    let start = Instant::now();
    within(Duration::from_secs(60), start, fuzz_many(Oracle::Backends, 300))
}

fn c9_replay() -> Check {
    let pairs = [
        (Oracle::Soundness, Mutant::SkipShift),
        (Oracle::IntFix, Mutant::SkipShift),
        (Oracle::IntFix, Mutant::StopAfterFirstRound),
        (Oracle::Relaxed, Mutant::AccumulateScores),
        (Oracle::Backends, Mutant::AccumulateScores),
    ];
    let mut total = 0;
    for (oracle, mutant) in pairs {
        let mut caught = 0;
        for seed in 0..40 {
            let r = fuzz_one(oracle, &GenConfig::default().with_seed(1000 + seed), Some(mutant));
            if r.verdict != Verdict::Fail {
                continue;
            }
            caught += 1;
            let again = replay(&r).map_err(|e| e.to_string())?;
            if serde_json::to_string(&again).unwrap() != serde_json::to_string(&r).unwrap() {
                return Err(format!("{oracle}/{mutant:?} seed {seed}: replay differs"));
            }
            let text = r.shrunk_program.as_ref().ok_or("failure without a shrunk program")?;
            let small = parse(text, oracle.input_tier()).map_err(|e| e.to_string())?;
            let full = parse(&r.program, oracle.input_tier()).map_err(|e| e.to_string())?;
            let (_, case) = gen_case(oracle, r.config.as_ref().unwrap(), r.attempt);
            if !check_case(oracle, &small, &case, Some(mutant)).is_fail() {
                return Err(format!("{oracle}/{mutant:?} seed {seed}: shrunk program passes"));
            }
            if small.size() > full.size() {
                return Err(format!("{oracle}/{mutant:?} seed {seed}: shrinking grew the program"));
            }
        }
        if caught == 0 {
            return Err(format!("{oracle}/{mutant:?}: mutant never caught"));
        }
        total += caught;
    }
    Ok(format!("{total} mutant failures replayed and shrunk"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("1 soundness oracle", c1_soundness),
        ("2 interpreter vs fixed point", c2_intfix),
        ("3 relaxed soundness", c3_relaxed),
        ("4 iteration counts", c4_rounds),
        ("5 update/copy fixtures", c5_update_copy_figure),
        ("6 dense grid fixture", c6_dense_grid),
        ("7 law suite", c7_laws),
        ("8 backend agreement", c8_backends),
        ("9 determinism and replay", c9_replay),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|w| name.contains(w.as_str())) {
            continue;
        }
        match f() {
            Ok(msg) => println!("criterion {name}: PASS ({msg})"),
            Err(msg) => {
                println!("criterion {name}: FAIL ({msg})");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
