use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use vecloop_core::bench::{bench_arm, bench_hmm, bench_tcm_like, BenchResult};
use vecloop_core::harness::{check_law, fuzz_one, replay, CheckReport, GenConfig, Law, Oracle, Verdict};
use vecloop_core::harness::oracle::{
    check_backends, check_embedding, check_int_vs_fixpoint, check_relaxed, check_soundness,
};
use vecloop_core::parse::{parse, parse_index, GRAMMAR_VERSION};
use vecloop_core::print::print;
use vecloop_core::state::CanonCell;
use vecloop_core::target::Trace;
use vecloop_core::{
    lower_relaxed, run_relaxed, run_src, run_tgt, vectorise, vectorise_relaxed, AChain, Cmd, Dense, Error, Mode,
    Mutant, PMap, Rdb, Sparse, SrcState, Store, Tensor, Tier, TgtState, Ty, Val, Var,
};

const TAXONOMY: &str = "\
Error kinds (printed as `error[Kind]: message`):
  exit 2: SyntaxError TierViolation DuplicateIndexString TypeError InvalidInput
  exit 3: StringAlreadyPresent MissingString EmptyIndexLost UnknownString
          NegativeComponent UnsupportedAxisOrder PrimitiveDomainError NaNScore
          NotComparable
Exit codes: 0 ok, 1 oracle or law failure, 2 usage or parse error, 3 runtime error.";

#[derive(Parser)]
#[command(name = "vecloop", version, about = "Loop vectorisation with fixed-point iteration for a small probabilistic language")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program and print its final state and score as JSON.
    Run(RunArgs),
    /// Translate a program to a lower tier and print it.
    Translate(TranslateArgs),
    /// Run one oracle on a given program and print the report.
    Check(CheckArgs),
    /// Check the algebraic laws on random inputs; prints JSON lines.
    Laws(LawsArgs),
    /// Run an oracle on generated programs; prints JSON lines of reports.
    Fuzz(FuzzArgs),
    /// Re-run the reports in a file from their seed and configuration.
    Replay(ReplayArgs),
    /// Count fixed-point rounds on the benchmark models; prints CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TierArg {
    Source,
    Target,
    Relaxed,
}

impl From<TierArg> for Tier {
    fn from(t: TierArg) -> Tier {
        match t {
            TierArg::Source => Tier::Source,
            TierArg::Target => Tier::Target,
            TierArg::Relaxed => Tier::Relaxed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixpoint,
    Unrolled,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Sparse,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum FromTier {
    Source,
    Relaxed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ToTier {
    Target,
    Relaxed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Arm,
    Hmm,
    Tcm,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutantArg {
    SkipShift,
    AccumulateScores,
    StopAfterFirstRound,
}

impl From<MutantArg> for Mutant {
    fn from(m: MutantArg) -> Mutant {
        match m {
            MutantArg::SkipShift => Mutant::SkipShift,
            MutantArg::AccumulateScores => Mutant::AccumulateScores,
            MutantArg::StopAfterFirstRound => Mutant::StopAfterFirstRound,
        }
    }
}

#[derive(Args)]
struct Inputs {
    /// Program file.
    #[arg(long)]
    program: PathBuf,
    /// Database file (JSON); defaults to the constant-zero database.
    #[arg(long)]
    rdb: Option<PathBuf>,
    /// Initial state file (JSON); variables not listed start at 0.
    #[arg(long)]
    state: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    tier: TierArg,
    #[command(flatten)]
    inputs: Inputs,
    /// How target loops run.
    #[arg(long, value_enum, default_value = "fixpoint")]
    mode: ModeArg,
    /// Storage used for target states.
    #[arg(long, value_enum, default_value = "sparse")]
    backend: Backend,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long, value_enum)]
    from: FromTier,
    #[arg(long, value_enum)]
    to: ToTier,
    file: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// embedding, soundness, relaxed (source programs) or intfix, backends (target programs).
    #[arg(long, value_parser = parse_oracle)]
    oracle: Oracle,
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LawsArgs {
    /// Restrict to these laws; all by default.
    #[arg(long, value_parser = parse_law)]
    law: Vec<Law>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, value_parser = parse_oracle)]
    oracle: Oracle,
    /// Number of seeds, starting at `--seed`.
    #[arg(long, default_value_t = 100)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generator configuration (JSON); its seed is ignored.
    #[arg(long)]
    cfg: Option<PathBuf>,
    /// Worker threads; output order does not depend on this.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Run against a deliberately broken interpreter.
    #[arg(long, value_enum)]
    mutant: Option<MutantArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// File of reports, one JSON object per line.
    file: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Parameter sets such as `N=20,K=3`; repeatable. Defaults depend on the suite.
    #[arg(long)]
    params: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_oracle(s: &str) -> Result<Oracle, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_law(s: &str) -> Result<Law, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    /// An oracle or law reported a failure; the output has the details.
    Check,
    /// Bad arguments or unreadable input files.
    Input(String),
    Lib(Error),
    /// The reference interpreter failed on the given inputs.
    Reference(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cmd = Cli::command().after_help(format!("Grammar version: {GRAMMAR_VERSION}\n\n{TAXONOMY}"));
    let cli = match cmd.try_get_matches().and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.cmd {
        Command::Run(a) => cmd_run(a),
        Command::Translate(a) => cmd_translate(a),
        Command::Check(a) => cmd_check(a),
        Command::Laws(a) => cmd_laws(a),
        Command::Fuzz(a) => cmd_fuzz(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error[InvalidInput]: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Reference(detail)) => {
            eprintln!("error: the reference run failed: {detail}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(if e.is_static() { 2 } else { 3 })
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Input(e.to_string()))
        }
    }
}

fn to_json_text(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

/// JSON number, with non-finite values written as strings.
fn num(x: f64) -> Value {
    if x.is_nan() {
        json!("NaN")
    } else if x.is_infinite() {
        json!(if x > 0.0 { "inf" } else { "-inf" })
    } else {
        json!(x)
    }
}

fn val_json(v: Val) -> Value {
    match v {
        Val::Int(k) => json!(k),
        Val::Real(r) => num(r),
    }
}

fn entries<V: vecloop_core::Scalar>(m: &PMap<V>, f: impl Fn(V) -> Value) -> Value {
    Value::Array(m.iter().map(|(i, v)| json!({ "index": i.to_string(), "value": f(v) })).collect())
}

fn tensor_json(t: &Tensor) -> Value {
    entries(t, num)
}

fn tgt_state_json<S: Store>(st: &TgtState<S>) -> Value {
    let mut obj = Map::new();
    for (x, cell) in st.canonical() {
        let v = match &cell {
            CanonCell::Int(m) => entries(m, |k| json!(k)),
            CanonCell::Real(m) => entries(m, num),
        };
        obj.insert(x.to_string(), v);
    }
    Value::Object(obj)
}

fn trace_json(t: &Trace) -> Value {
    Value::Array(
        t.sites
            .iter()
            .enumerate()
            .map(|(k, s)| {
                json!({
                    "site": k,
                    "executions": s.executions,
                    "totalRounds": s.total_rounds,
                    "maxRounds": s.max_rounds,
                    "earlyExits": s.early_exits,
                })
            })
            .collect(),
    )
}

fn parse_var(key: &str) -> CliResult<Var> {
    let (name, ty) = match key.rsplit_once(':') {
        Some((n, "int")) => (n, Ty::Int),
        Some((n, "real")) => (n, Ty::Real),
        Some(_) => return Err(Failure::Input(format!("bad variable key {key:?}; use name, name:int or name:real"))),
        None => (key, Ty::Real),
    };
    if name.is_empty() {
        return Err(Failure::Input(format!("bad variable key {key:?}")));
    }
    Ok(match ty {
        Ty::Int => Var::int(name),
        Ty::Real => Var::real(name),
    })
}

fn parse_val(x: &Var, v: &Value) -> CliResult<Val> {
    let bad = || Failure::Input(format!("bad value {v} for {x}"));
    match x.ty {
        Ty::Int => v.as_i64().map(Val::Int).ok_or_else(bad),
        Ty::Real => match v {
            Value::Number(n) => n.as_f64().map(Val::Real).ok_or_else(bad),
            Value::String(s) => match s.as_str() {
                "NaN" => Ok(Val::Real(f64::NAN)),
                "inf" => Ok(Val::Real(f64::INFINITY)),
                "-inf" => Ok(Val::Real(f64::NEG_INFINITY)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        },
    }
}

/// A state file: variable key to either a scalar or a list of
/// `{"index": "[(\"q\",0)]", "value": v}` entries.
type StateFile = BTreeMap<Var, Vec<(vecloop_core::Index, Val)>>;

fn load_state(path: &Option<PathBuf>) -> CliResult<StateFile> {
    let Some(path) = path else {
        return Ok(BTreeMap::new());
    };
    let text = read(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let obj = v
        .as_object()
        .ok_or_else(|| Failure::Input("state file must be a JSON object".into()))?;
    let mut out = BTreeMap::new();
    for (key, v) in obj {
        let x = parse_var(key)?;
        let cells = match v {
            Value::Array(items) => {
                let mut cells = Vec::new();
                for item in items {
                    let index = item
                        .get("index")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Failure::Input(format!("entry of {key} needs a string \"index\"")))?;
                    let value = item
                        .get("value")
                        .ok_or_else(|| Failure::Input(format!("entry of {key} needs a \"value\"")))?;
                    cells.push((parse_index(index)?, parse_val(&x, value)?));
                }
                cells
            }
            _ => vec![(vecloop_core::Index::empty(), parse_val(&x, v)?)],
        };
        out.insert(x, cells);
    }
    Ok(out)
}

fn src_state(file: StateFile) -> CliResult<SrcState> {
    let mut vals = BTreeMap::new();
    for (x, cells) in file {
        match cells.as_slice() {
            [(i, v)] if i.is_empty() => {
                vals.insert(x, *v);
            }
            _ => return Err(Failure::Input(format!("source state for {x} must be a single scalar"))),
        }
    }
    Ok(SrcState::from_map(vals)?)
}

fn tgt_state(file: StateFile) -> CliResult<TgtState<Sparse>> {
    let mut st = TgtState::new(Sparse);
    for (x, cells) in file {
        match x.ty {
            Ty::Int => {
                let m = PMap::from_entries(cells.into_iter().map(|(i, v)| (i, v.as_int())));
                m.check_rooted().map_err(|_| Failure::Input(format!("{x} has no value at []")))?;
                st.set_int(&x, &m)?;
            }
            Ty::Real => {
                let m = PMap::from_entries(cells.into_iter().map(|(i, v)| (i, v.as_real())));
                m.check_rooted().map_err(|_| Failure::Input(format!("{x} has no value at []")))?;
                st.set_real(&x, &m)?;
            }
        }
    }
    Ok(st)
}

struct Loaded {
    program: Cmd,
    db: Rdb,
    state: StateFile,
}

fn load(inputs: &Inputs, tier: Tier) -> CliResult<Loaded> {
    let program = parse(&read(&inputs.program)?, tier)?;
    let db = match &inputs.rdb {
        Some(p) => Rdb::from_json(&read(p)?)?,
        None => Rdb::default(),
    };
    Ok(Loaded {
        program,
        db,
        state: load_state(&inputs.state)?,
    })
}

fn cmd_run(a: RunArgs) -> CliResult<()> {
    let tier = Tier::from(a.tier);
    let l = load(&a.inputs, tier)?;
    let mode = match a.mode {
        ModeArg::Fixpoint => Mode::Fixpoint,
        ModeArg::Unrolled => Mode::Unrolled,
    };
    let out = match tier {
        Tier::Source => {
            let (st, score) = run_src(&l.program, &l.db, &src_state(l.state)?)?;
            let mut fin = Map::new();
            for (x, v) in st.vars() {
                fin.insert(x.to_string(), val_json(v));
            }
            json!({ "tier": "source", "score": num(score), "finalState": fin })
        }
        Tier::Target => {
            let sigma = tgt_state(l.state)?;
            match a.backend {
                Backend::Sparse => run_target(&l.program, &l.db, &sigma, mode, "sparse")?,
                Backend::Dense => {
                    let dense = sigma.rebase(Dense::for_program(&l.program)?)?;
                    run_target(&l.program, &l.db, &dense, mode, "dense")?
                }
            }
        }
        Tier::Relaxed => {
            let sigma = tgt_state(l.state)?;
            match a.backend {
                Backend::Sparse => run_relaxed_json(&l.program, &l.db, &sigma, "sparse")?,
                Backend::Dense => {
                    let dense = sigma.rebase(Dense::for_program(&lower_relaxed(&l.program))?)?;
                    run_relaxed_json(&l.program, &l.db, &dense, "dense")?
                }
            }
        }
    };
    emit(&a.out, &to_json_text(&out))
}

fn run_target<S: Store>(c: &Cmd, db: &Rdb, sigma: &TgtState<S>, mode: Mode, backend: &str) -> CliResult<Value> {
    let o = run_tgt(c, db, sigma, &AChain::root(), mode)?;
    Ok(json!({
        "tier": "target",
        "mode": match mode { Mode::Fixpoint => "fixpoint", Mode::Unrolled => "unrolled" },
        "backend": backend,
        "score": num(o.score.total()),
        "scoreTensor": tensor_json(&o.score),
        "finalState": tgt_state_json(&o.state),
        "finalStateDigest": o.state.digest(),
        "roundsPerLoop": trace_json(&o.trace),
    }))
}

fn run_relaxed_json<S: Store>(c: &Cmd, db: &Rdb, sigma: &TgtState<S>, backend: &str) -> CliResult<Value> {
    let a = AChain::root();
    let o = run_relaxed(c, db, sigma, &a)?;
    let plain = run_tgt(&lower_relaxed(c), db, sigma, &a, Mode::Fixpoint)?;
    Ok(json!({
        "tier": "relaxed",
        "backend": backend,
        "score": num(o.score.total()),
        "scoreTensor": tensor_json(&o.score),
        "finalState": tgt_state_json(&o.state),
        "finalStateDigest": o.state.digest(),
        "flag": o.flag.to_json(),
        "roundsPerLoop": trace_json(&o.trace),
        "plainRoundsPerLoop": trace_json(&plain.trace),
    }))
}

fn cmd_translate(a: TranslateArgs) -> CliResult<()> {
    let text = read(&a.file)?;
    let out = match (a.from, a.to) {
        (FromTier::Source, ToTier::Target) => vectorise(&parse(&text, Tier::Source)?),
        (FromTier::Source, ToTier::Relaxed) => vectorise_relaxed(&parse(&text, Tier::Source)?),
        (FromTier::Relaxed, ToTier::Target) => lower_relaxed(&parse(&text, Tier::Relaxed)?),
        (FromTier::Relaxed, ToTier::Relaxed) => parse(&text, Tier::Relaxed)?,
    };
    let mut s = print(&out);
    s.push('\n');
    emit(&a.out, &s)
}

fn cmd_check(a: CheckArgs) -> CliResult<()> {
    let l = load(&a.inputs, a.oracle.input_tier())?;
    let report = match a.oracle {
        Oracle::Embedding => check_embedding(&l.program, &l.db, &src_state(l.state)?),
        Oracle::Soundness => check_soundness(&l.program, &l.db, &src_state(l.state)?),
        Oracle::Relaxed => check_relaxed(&l.program, &l.db, &src_state(l.state)?),
        Oracle::IntFix => check_int_vs_fixpoint(&l.program, &l.db, &tgt_state(l.state)?, &AChain::root()),
        Oracle::Backends => check_backends(&l.program, &l.db, &tgt_state(l.state)?, &AChain::root()),
    };
    emit(&a.out, &to_json_text(&report))?;
    verdict_status(&report)
}

fn verdict_status(r: &CheckReport) -> CliResult<()> {
    match r.verdict {
        Verdict::Pass => Ok(()),
        Verdict::Fail => Err(Failure::Check),
        Verdict::Invalid => {
            let detail = r.counterexample.as_ref().map_or("", |c| c.detail.as_str());
            Err(Failure::Reference(detail.to_string()))
        }
    }
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).expect("serialisable"));
        s.push('\n');
    }
    s
}

fn cmd_laws(a: LawsArgs) -> CliResult<()> {
    let laws = if a.law.is_empty() { Law::ALL.to_vec() } else { a.law };
    let reports: Vec<_> = laws.into_iter().map(|law| check_law(law, a.trials, a.seed)).collect();
    emit(&a.out, &jsonl(&reports))?;
    if reports.iter().all(|r| r.ok()) {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_fuzz(a: FuzzArgs) -> CliResult<()> {
    use rayon::prelude::*;
    let base = match &a.cfg {
        Some(p) => serde_json::from_str::<GenConfig>(&read(p)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => GenConfig::default(),
    };
    base.validate()?;
    let mutant = a.mutant.map(Mutant::from);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| Failure::Input(e.to_string()))?;
    let seeds: Vec<u64> = (0..a.n).map(|k| a.seed.wrapping_add(k)).collect();
    let reports: Vec<CheckReport> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| fuzz_one(a.oracle, &base.with_seed(s), mutant))
            .collect()
    });
    emit(&a.out, &jsonl(&reports))?;
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    let (fail, invalid) = (count(Verdict::Fail), count(Verdict::Invalid));
    eprintln!(
        "{}: {} passed, {fail} failed, {invalid} without a valid case",
        a.oracle,
        count(Verdict::Pass)
    );
    if fail > 0 {
        Err(Failure::Check)
    } else {
        Ok(())
    }
}

fn cmd_replay(a: ReplayArgs) -> CliResult<()> {
    let text = read(&a.file)?;
    let mut out = Vec::new();
    let mut ok = true;
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let original: CheckReport = serde_json::from_str(line)
            .map_err(|e| Failure::Input(format!("{} line {}: {e}", a.file.display(), n + 1)))?;
        let again = replay(&original)?;
        if again != original {
            eprintln!("line {}: replay differs from the recorded report", n + 1);
            ok = false;
        }
        ok &= again.verdict != Verdict::Fail;
        out.push(again);
    }
    emit(&a.out, &jsonl(&out))?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn bench_params(spec: &str, names: &[&str]) -> CliResult<Vec<u32>> {
    let mut vals: BTreeMap<&str, u32> = BTreeMap::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("bad parameter {part:?}; use NAME=VALUE")))?;
        let name = names
            .iter()
            .find(|n| n.eq_ignore_ascii_case(k.trim()))
            .ok_or_else(|| Failure::Input(format!("unknown parameter {k:?}; expected {}", names.join(", "))))?;
        let v = v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("bad value in {part:?}")))?;
        vals.insert(name, v);
    }
    names
        .iter()
        .map(|n| vals.get(n).copied().ok_or_else(|| Failure::Input(format!("missing parameter {n}"))))
        .collect()
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    let (names, defaults): (&[&str], Vec<&str>) = match a.suite {
        Suite::Arm => (
            &["N", "K"],
            vec![
                "N=10,K=1", "N=10,K=3", "N=10,K=5", "N=10,K=10", "N=20,K=1", "N=20,K=3", "N=20,K=5", "N=20,K=10",
                "N=100,K=1", "N=100,K=3", "N=100,K=5", "N=100,K=10",
            ],
        ),
        Suite::Hmm => (&["T", "order"], vec!["T=10,order=1", "T=10,order=2"]),
        Suite::Tcm => (&["S", "T"], vec!["S=2,T=10"]),
    };
    let specs: Vec<String> = if a.params.is_empty() {
        defaults.into_iter().map(String::from).collect()
    } else {
        a.params
    };
    let mut csv = String::from("suite,params,rounds,agree,wallclock-ms,unrolled-rounds,dense-ms\n");
    for spec in &specs {
        let p = bench_params(spec, names)?;
        let r: BenchResult = match a.suite {
            Suite::Arm => bench_arm(p[0], p[1])?,
            Suite::Hmm => bench_hmm(p[0], p[1])?,
            Suite::Tcm => bench_tcm_like(p[0], p[1])?,
        };
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        csv.push_str(&format!(
            "{},{},{},{},{:.3},{},{:.3}\n",
            r.suite,
            params.join(";"),
            r.rounds,
            r.agree,
            r.sparse_ms,
            r.unrolled_rounds,
            r.dense_ms
        ));
    }
    emit(&a.out, &csv)
}
