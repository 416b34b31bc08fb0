use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use tangleforge::closure::{GreedyOrder, Separation, TreeCompatibleSet, Workbench};
use tangleforge::flower::{maximal_flower, s_order, verify_flower, Flower};
use tangleforge::io::{flower_to_dot, tree_to_dot, SystemJson};
use tangleforge::ktree::{build_maximal_tree, verify_partial_ks_tree};
use tangleforge::oracle::{oracle_report, Oracle, MAX_ORACLE_ELEMENTS};
use tangleforge::tangle::TangleJson;
use tangleforge::{
    canonical_vertical_tangle, enumerate_tangles, verify_tangle, ConnectivitySystem, Error, SubsetMask, SystemKind,
    Tangle,
};

#[derive(Parser)]
#[command(
    name = "tangleforge",
    version,
    about = "Tangles, full closures, flowers and (k,S)-trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the connectivity axioms (and a tangle, if given).
    Check(Common),
    /// Enumerate all tangles of order k.
    Tangles(Common),
    /// Full closure of a set.
    Fcl(Common),
    /// (k,S)-separations grouped into equivalence classes.
    Separations(Common),
    /// Verify a flower, or grow a maximal one from a seed separation.
    Flower(Common),
    /// Build a maximal partial (k,S)-tree.
    Tree(Common),
    /// Recompute everything by brute force and compare with the engines.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// System description (JSON).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: Option<i64>,
    /// Tangle JSON file, or `canonical` for the matroid tangle {A : r(A) ≤ k-2}.
    #[arg(long)]
    tangle: Option<String>,
    /// `default`, or a JSON file listing the members of S.
    #[arg(long = "S", default_value = "default")]
    s: String,
    /// Emit DOT instead of JSON.
    #[arg(long)]
    dot: bool,
    #[arg(long, default_value_t = MAX_ORACLE_ELEMENTS)]
    max_n: usize,
    #[arg(long, default_value_t = 0x7a6e_6c65_7331)]
    seed: u64,
    /// Cross-check the result against the brute-force oracle.
    #[arg(long)]
    verify: bool,
    /// A set of elements, comma separated (labels or indices).
    #[arg(long)]
    set: Option<String>,
    /// Petals separated by `;`, elements by `,`.
    #[arg(long)]
    petals: Option<String>,
    /// Petal cap for oracle flower enumeration.
    #[arg(long, default_value_t = 4)]
    max_petals: usize,
}

enum Failure {
    Usage(String),
    Verification(Value),
    TooLarge(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SearchSpaceTooLarge { .. } => Failure::TooLarge(e.to_string()),
            Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            other => Failure::Verification(json!({ "error": other.to_string() })),
        }
    }
}

type Outcome = Result<String, Failure>;

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_system(c: &Common, verify: Option<bool>) -> Result<ConnectivitySystem, Failure> {
    let spec = SystemJson::parse(&read(&c.input)?)?;
    let sys = spec.build(verify)?;
    if sys.n() > c.max_n {
        return Err(Failure::TooLarge(format!(
            "ground set has {} elements, cap is {}",
            sys.n(),
            c.max_n
        )));
    }
    Ok(sys)
}

fn need_k(c: &Common) -> Result<i64, Failure> {
    match c.k {
        Some(k) if k >= 1 => Ok(k),
        Some(k) => Err(Failure::Usage(format!("--k must be at least 1, got {k}"))),
        None => Err(Failure::Usage("--k is required".into())),
    }
}

fn parse_set(sys: &ConnectivitySystem, text: &str) -> Result<SubsetMask, Failure> {
    let mut x = SubsetMask::EMPTY;
    for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let e = sys
            .ground()
            .element(tok)
            .or_else(|| tok.parse::<usize>().ok().filter(|&e| e < sys.n()))
            .ok_or_else(|| Failure::Usage(format!("unknown element `{tok}`")))?;
        x = x.with(e);
    }
    Ok(x)
}

fn load_tangle(c: &Common, sys: &ConnectivitySystem, k: i64) -> Result<Tangle, Failure> {
    match c.tangle.as_deref() {
        Some("canonical") => match sys.kind() {
            SystemKind::Matroid(rank) => Ok(canonical_vertical_tangle(rank, k)?),
            _ => Err(Failure::Usage("the canonical tangle needs a matroid".into())),
        },
        Some(path) => {
            let tj: TangleJson = serde_json::from_str(&read(Path::new(path))?)
                .map_err(|e| Failure::Usage(format!("tangle JSON: {e}")))?;
            if tj.k != k {
                return Err(Failure::Usage(format!("tangle has order {}, --k is {k}", tj.k)));
            }
            Ok(tj.into_tangle(sys.ground())?)
        }
        None => {
            let mut all = enumerate_tangles(sys, k)?;
            match all.len() {
                1 => Ok(all.pop().unwrap()),
                m => Err(Failure::Usage(format!(
                    "{m} tangles of order {k}; pick one with --tangle"
                ))),
            }
        }
    }
}

fn load_s(c: &Common) -> Result<TreeCompatibleSet, Failure> {
    if c.s == "default" {
        return Ok(TreeCompatibleSet::DefaultNonsequential);
    }
    let sets: Vec<SubsetMask> =
        serde_json::from_str(&read(Path::new(&c.s))?).map_err(|e| Failure::Usage(format!("S JSON: {e}")))?;
    Ok(TreeCompatibleSet::explicit(sets))
}

fn show_all(sys: &ConnectivitySystem, sets: &[SubsetMask]) -> Vec<String> {
    sets.iter().map(|&x| sys.ground().show(x)).collect()
}

fn check(c: &Common) -> Outcome {
    let sys = load_system(c, Some(false))?;
    let report = sys.verify_connectivity_axioms(c.seed);
    let mut out = json!({ "n": sys.n(), "kind": sys.kind().name(), "axioms": report });
    let mut ok = report.is_empty();
    if c.tangle.is_some() {
        let k = need_k(c)?;
        let t = load_tangle(c, &sys, k)?;
        let tr = verify_tangle(&sys, &t)?;
        ok &= tr.is_empty();
        out["tangle"] = json!({ "report": tr, "robust": t.is_robust() });
    }
    out["ok"] = json!(ok);
    if ok {
        Ok(pretty(&out))
    } else {
        Err(Failure::Verification(out))
    }
}

fn tangles(c: &Common) -> Outcome {
    let sys = load_system(c, None)?;
    let k = need_k(c)?;
    let found: Vec<Value> = enumerate_tangles(&sys, k)?
        .iter()
        .map(|t| {
            let mut v = serde_json::to_value(t.to_json()).unwrap();
            v["robust"] = json!(t.is_robust());
            v
        })
        .collect();
    Ok(pretty(&found))
}

fn fcl(c: &Common) -> Outcome {
    let sys = load_system(c, None)?;
    let k = need_k(c)?;
    let t = load_tangle(c, &sys, k)?;
    let wb = Workbench::new(&sys, &t);
    let x = parse_set(
        &sys,
        c.set
            .as_deref()
            .ok_or_else(|| Failure::Usage("--set is required".into()))?,
    )?;
    let closure = wb.full_closure(x)?;
    let sequence = wb.closure_sequence(x, GreedyOrder::SmallestFirst)?;
    let mut out = json!({ "set": x, "closure": closure, "sequence": sequence, "shown": sys.ground().show(closure) });
    if c.verify {
        let expected = Oracle::new(&sys, &t)?.full_closure(x);
        out["oracle"] = json!(expected);
        if expected != closure {
            return Err(Failure::Verification(out));
        }
    }
    Ok(pretty(&out))
}

fn separations(c: &Common) -> Outcome {
    let sys = load_system(c, None)?;
    let k = need_k(c)?;
    let t = load_tangle(c, &sys, k)?;
    let wb = Workbench::with_s(&sys, &t, load_s(c)?);
    let s_report = wb.verify_tree_compatible()?;
    if !s_report.is_empty() {
        return Err(Failure::Verification(json!({ "tree_compatible": s_report })));
    }
    let classes: Vec<Value> = wb
        .index()?
        .classes()
        .iter()
        .map(|class| {
            let seps: Vec<Value> = class.iter().map(|&x| json!(Separation::new(wb.full(), x, k))).collect();
            json!({ "separations": seps, "shown": show_all(&sys, class) })
        })
        .collect();
    Ok(pretty(&json!({ "k": k, "classes": classes })))
}

fn parse_petals(sys: &ConnectivitySystem, text: &str) -> Result<Vec<SubsetMask>, Failure> {
    text.split(';').map(|p| parse_set(sys, p)).collect()
}

fn emit_flower(c: &Common, sys: &ConnectivitySystem, wb: &Workbench, f: &Flower) -> Outcome {
    if c.dot {
        return Ok(flower_to_dot(f, sys.ground()));
    }
    let order = s_order(wb, f)?;
    Ok(pretty(
        &json!({ "flower": f.to_json(), "s_order": order, "shown": f.show(sys.ground()) }),
    ))
}

fn flower(c: &Common) -> Outcome {
    let sys = load_system(c, None)?;
    let k = need_k(c)?;
    let t = load_tangle(c, &sys, k)?;
    let wb = Workbench::with_s(&sys, &t, load_s(c)?);
    let f = match (&c.petals, &c.set) {
        (Some(p), _) => verify_flower(&wb, parse_petals(&sys, p)?)?,
        (None, Some(s)) => maximal_flower(&wb, Separation::new(wb.full(), parse_set(&sys, s)?, k))?,
        (None, None) => return Err(Failure::Usage("give --petals or a seed side with --set".into())),
    };
    emit_flower(c, &sys, &wb, &f)
}

fn tree(c: &Common) -> Outcome {
    let sys = load_system(c, None)?;
    let k = need_k(c)?;
    let t = load_tangle(c, &sys, k)?;
    let wb = Workbench::with_s(&sys, &t, load_s(c)?);
    let tree = build_maximal_tree(&wb)?;
    let verdict = verify_partial_ks_tree(&wb, &tree)?;
    if !verdict.is_ok() {
        return Err(Failure::Verification(
            json!({ "tree": tree, "violations": verdict.violations }),
        ));
    }
    if c.verify {
        let mut oracle = Oracle::new(&sys, &t)?;
        if let TreeCompatibleSet::Explicit(s) = wb.s() {
            oracle = oracle.with_explicit_s(s.iter().copied());
        }
        let cert = oracle.certify_tree(&tree);
        if !cert.is_certified() {
            return Err(Failure::Verification(json!({ "tree": tree, "oracle": cert })));
        }
    }
    if c.dot {
        Ok(tree_to_dot(&tree, sys.ground()))
    } else {
        Ok(pretty(
            &json!({ "tree": tree, "displayed_classes": verdict.displayed.len() }),
        ))
    }
}

fn oracle(c: &Common) -> Outcome {
    let sys = load_system(c, None)?;
    let k = need_k(c)?;
    let t = load_tangle(c, &sys, k)?;
    let wb = Workbench::with_s(&sys, &t, load_s(c)?);
    let mut o = Oracle::new(&sys, &t)?;
    if let TreeCompatibleSet::Explicit(s) = wb.s() {
        o = o.with_explicit_s(s.iter().copied());
    }
    let report = oracle_report(&wb, &o, c.max_petals)?;
    if report.disagreements.is_empty() {
        Ok(pretty(&report))
    } else {
        Err(Failure::Verification(serde_json::to_value(&report).unwrap()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Check(c) => check(c),
        Command::Tangles(c) => tangles(c),
        Command::Fcl(c) => fcl(c),
        Command::Separations(c) => separations(c),
        Command::Flower(c) => flower(c),
        Command::Tree(c) => tree(c),
        Command::Oracle(c) => oracle(c),
    };
    match outcome {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(report)) => {
            print!("{}", pretty(&report));
            ExitCode::from(2)
        }
        Err(Failure::TooLarge(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
