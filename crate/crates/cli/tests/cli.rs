use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use vecloop_core::harness::CheckReport;
use vecloop_core::parse::parse;
use vecloop_core::print::print;
use vecloop_core::{run_src, vectorise, Rdb, SrcState, Tier};

const HMM: &str = r#"for t:int in range(3) {
  x := fetch([("z", t:int)]);
  score(normal_logpdf(x, y, 1.0));
  score(normal_logpdf(o, x, 1.0));
  y := x
}
"#;

const HMM_DB: &str = r#"{"default":{"kind":"const","value":0.0},"entries":[
  {"index":[["z",0]],"value":0.0},{"index":[["z",1]],"value":0.1},{"index":[["z",2]],"value":0.2}]}"#;

fn vecloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vecloop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

struct Files(TempDir);

impl Files {
    fn new() -> Self {
        Files(tempfile::tempdir().unwrap())
    }

    fn put(&self, name: &str, text: &str) -> String {
        let p = self.0.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn run_source_matches_library() {
    let f = Files::new();
    let prog = f.put("hmm.vl", HMM);
    let db = f.put("z.json", HMM_DB);
    let o = vecloop(&["run", "--tier", "source", "--program", &prog, "--rdb", &db]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let (st, score) = run_src(&parse(HMM, Tier::Source).unwrap(), &Rdb::from_json(HMM_DB).unwrap(), &SrcState::new()).unwrap();
    assert_eq!(v["score"].as_f64().unwrap().to_bits(), score.to_bits());
    let c = -0.5 * (2.0 * std::f64::consts::PI).ln();
    assert!((score - (6.0 * c - 0.035)).abs() < 1e-12);
    for (x, val) in st.vars() {
        assert_eq!(v["finalState"][x.to_string()], serde_json::json!(match val {
            vecloop_core::Val::Int(k) => serde_json::json!(k),
            vecloop_core::Val::Real(r) => serde_json::json!(r),
        }));
    }
}

#[test]
fn translate_then_run_target() {
    let f = Files::new();
    let prog = f.put("hmm.vl", HMM);
    let db = f.put("z.json", HMM_DB);
    let o = vecloop(&["translate", "--from", "source", "--to", "target", &prog]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let tc = parse(&text, Tier::Target).unwrap();
    assert_eq!(print(&tc), print(&vectorise(&parse(HMM, Tier::Source).unwrap())));
    assert!(text.contains("loop_fixpt_noacc(3)"));

    let tgt = f.put("hmm.tvl", &text);
    let mut digests = Vec::new();
    for (mode, backend, rounds) in [("fixpoint", "sparse", 2), ("unrolled", "sparse", 3), ("fixpoint", "dense", 2)] {
        let o = vecloop(&["run", "--tier", "target", "--program", &tgt, "--rdb", &db, "--mode", mode, "--backend", backend]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&o);
        assert_eq!(v["roundsPerLoop"][0]["maxRounds"], rounds, "{mode} {backend}");
        assert_eq!(v["scoreTensor"][0]["index"], "[]");
        digests.push(v["finalStateDigest"].as_str().unwrap().to_string());
    }
    assert!(digests.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn run_relaxed_reports_flag_and_both_round_counts() {
    let f = Files::new();
    let prog = f.put("hmm.vl", HMM);
    let db = f.put("z.json", HMM_DB);
    let o = vecloop(&["translate", "--from", "source", "--to", "relaxed", &prog]);
    let rel = f.put("hmm.rvl", &String::from_utf8(o.stdout).unwrap());
    let out = f.path("out.json");
    let o = vecloop(&["run", "--tier", "relaxed", "--program", &rel, "--rdb", &db, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&read(&out)).unwrap();
    assert!(v["flag"].is_object());
    let relaxed = v["roundsPerLoop"][0]["maxRounds"].as_u64().unwrap();
    let plain = v["plainRoundsPerLoop"][0]["maxRounds"].as_u64().unwrap();
    assert!(relaxed <= plain);
}

#[test]
fn state_file_sets_initial_values() {
    let f = Files::new();
    let prog = f.put("p.vl", "score(y); n:int := add(n:int, 1)");
    let st = f.put("s.json", r#"{"y": 2.5, "n:int": 4}"#);
    let o = vecloop(&["run", "--tier", "source", "--program", &prog, "--state", &st]);
    let v = stdout_json(&o);
    assert_eq!(v["score"], 2.5);
    assert_eq!(v["finalState"]["n:int"], 5);

    let tprog = f.put("t.vl", "score(y)");
    let tst = f.put("t.json", r#"{"y": [{"index": "[]", "value": 1.5}, {"index": "[(\"q\",0)]", "value": 7.0}]}"#);
    let o = vecloop(&["run", "--tier", "target", "--program", &tprog, "--state", &tst]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["score"], 1.5);
    assert_eq!(v["finalState"]["y"].as_array().unwrap().len(), 2);

    let unrooted = f.put("u.json", r#"{"y": [{"index": "[(\"q\",0)]", "value": 7.0}]}"#);
    let o = vecloop(&["run", "--tier", "target", "--program", &tprog, "--state", &unrooted]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let f = Files::new();
    let bad = f.put("bad.vl", "x := ");
    let o = vecloop(&["run", "--tier", "source", "--program", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("SyntaxError"));

    let tier = f.put("tier.vl", "shift(\"q\")");
    let o = vecloop(&["run", "--tier", "source", "--program", &tier]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("TierViolation"));

    let rt = f.put("rt.vl", "x := log(sub(0.0, 1.0)); score(x)");
    let o = vecloop(&["run", "--tier", "source", "--program", &rt]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PrimitiveDomainError"));

    assert_eq!(vecloop(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(vecloop(&["bench", "--suite", "arm", "--params", "N=3,K=4"]).status.code(), Some(2));
}

#[test]
fn help_documents_grammar_and_taxonomy() {
    let o = vecloop(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains(vecloop_core::parse::GRAMMAR_VERSION));
    for kind in ["SyntaxError", "PrimitiveDomainError", "NaNScore", "UnsupportedAxisOrder", "EmptyIndexLost"] {
        assert!(text.contains(kind), "{kind}");
    }
}

#[test]
fn fuzz_passes_and_is_deterministic() {
    let a = vecloop(&["fuzz", "--oracle", "soundness", "--n", "50", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = vecloop(&["fuzz", "--oracle", "soundness", "--n", "50", "--seed", "7", "--jobs", "4"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 50);
}

#[test]
fn fuzz_config_file() {
    let f = Files::new();
    let cfg = f.put("cfg.json", r#"{"max_depth": 2, "max_loop_len": 3}"#);
    let o = vecloop(&["fuzz", "--oracle", "embedding", "--n", "10", "--cfg", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    for line in String::from_utf8(o.stdout).unwrap().lines() {
        let r: CheckReport = serde_json::from_str(line).unwrap();
        assert_eq!(r.config.unwrap().max_depth, 2);
    }
}

#[test]
fn mutant_failures_replay_and_shrink() {
    let f = Files::new();
    let out = f.path("m.jsonl");
    let o = vecloop(&["fuzz", "--oracle", "intfix", "--n", "20", "--seed", "3", "--mutant", "skip-shift", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = read(&out);
    let failing: Vec<&str> = text.lines().filter(|l| l.contains("\"verdict\":\"fail\"")).collect();
    assert!(!failing.is_empty());
    for line in &failing {
        let r: CheckReport = serde_json::from_str(line).unwrap();
        assert!(r.shrunk_program.is_some());
        assert!(r.counterexample.is_some());
    }
    let one = f.put("one.jsonl", &format!("{}\n", failing[0]));
    let o = vecloop(&["replay", &one]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), format!("{}\n", failing[0]));
    assert!(o.stderr.is_empty() || !String::from_utf8_lossy(&o.stderr).contains("differs"));
}

#[test]
fn check_reports_verdicts() {
    let f = Files::new();
    let prog = f.put("hmm.vl", HMM);
    let db = f.put("z.json", HMM_DB);
    for oracle in ["embedding", "soundness", "relaxed"] {
        let o = vecloop(&["check", "--oracle", oracle, "--program", &prog, "--rdb", &db]);
        assert_eq!(o.status.code(), Some(0), "{oracle}");
        assert_eq!(stdout_json(&o)["verdict"], "pass");
    }
    let o = vecloop(&["translate", "--from", "source", "--to", "target", &prog]);
    let tgt = f.put("hmm.tvl", &String::from_utf8(o.stdout).unwrap());
    for oracle in ["intfix", "backends"] {
        let o = vecloop(&["check", "--oracle", oracle, "--program", &tgt, "--rdb", &db]);
        assert_eq!(o.status.code(), Some(0), "{oracle}");
    }
}

#[test]
fn laws_emit_one_line_each() {
    let o = vecloop(&["laws", "--trials", "5", "--law", "update_extend", "--law", "lstate_update"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<Value> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["law"], "lstate_update");
    assert_eq!(lines[1]["passed"], 5);
}

#[test]
fn bench_csv() {
    let o = vecloop(&["bench", "--suite", "hmm"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][..4], ["suite", "params", "rounds", "agree"]);
    assert_eq!(rows[1][..4], ["hmm", "T=10;order=1", "2", "true"]);
    assert_eq!(rows[2][..4], ["hmm", "T=10;order=2", "3", "true"]);
}
