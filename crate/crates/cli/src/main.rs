//! `hcomm`: higher commutators of finite algebras and bounded checks on `A_n`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use hcomm::commutator::{
    centrality_with, hc8_diagnostic, higher_commutator_oracle_with, higher_commutator_with, Limits,
};
use hcomm::error::Error;
use hcomm::matrices::{generate_bounded, generate_full_capped, DEFAULT_FINITE_CAP};
use hcomm::series::{check, eval_term, lemma31_bound_check, parse_term, series, Property, SeriesKind, Verdict};
use hcomm::verify::{run_lemma, Bounds};
use hcomm::{an_algebra, Element, Evaluator, FiniteAlgebra, Partition};
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const GRAMMAR: &str = "\
Input grammar:
  algebra file  {\"name\": s, \"size\": N, \"operations\": [{\"symbol\": s, \"arity\": k, \"table\": [...]}]}
                table index of (a0,...,a(k-1)) is sum a_d * N^(k-1-d)
  partition     blocks as lists, e.g. [[0,1],[2],[3,4,5]]
  element       o | r[i]^[j] | o[i,(g...)]^[j] | s(e,...,e)
  term          x | [term,...,term], e.g. [x,[x,x]]
  property      solvable | left-nilpotent | right-nilpotent | supernilpotent:K | solvable-in-dimension:N
  series kind   derived | lcs-left | lcs-right | dim:N

Exit codes: 0 ok or holds, 1 property fails or counterexample found, 2 usage error, 3 resource cap.";

#[derive(Parser, Debug)]
#[command(name = "hcomm", version, about = "Higher commutators and their series", after_help = GRAMMAR)]
struct Cli {
    /// Largest matrix space (finite) or stored cube count (A_n) before giving up.
    #[arg(long, global = true)]
    cube_cap: Option<u64>,
    /// Recorded in the configuration echo; every computation here is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Higher commutator by forced-pair fixpoint.
    Commutator(CommutatorArgs),
    /// Higher commutator as the meet of all centralizing congruences.
    OracleCommutator(ThetaArgs),
    /// Whether C(θ_0,…,θ_{n-1}; δ) holds.
    Centrality(CentralityArgs),
    /// Derived, lower central or dimension-n series.
    Series(SeriesArgs),
    /// Decide a series property within a step budget.
    Check(CheckArgs),
    /// Generate θ-matrices of a finite algebra or bounded matrices of A_n.
    GenMatrices(GenArgs),
    /// Bounded lemma and theorem checks on A_n.
    Paper(PaperArgs),
}

#[derive(Args, Debug)]
struct ThetaArgs {
    /// Algebra file (JSON).
    #[arg(short = 'a', long)]
    algebra: PathBuf,
    /// One congruence per axis, in order.
    #[arg(short = 'c', long = "con", required = true)]
    cons: Vec<String>,
    /// Coordinate permutation, e.g. 2,0,1; the pivot axis is its last entry.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct CommutatorArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    /// Also compute the oracle and report whether the two agree.
    #[arg(long)]
    oracle: bool,
    /// Report whether the nested-commutator inequality holds on these inputs.
    #[arg(long, value_parser = ["hc8"])]
    diagnostic: Option<String>,
    /// Split point m for the hc8 diagnostic.
    #[arg(long, default_value_t = 1)]
    split: usize,
}

#[derive(Args, Debug)]
struct CentralityArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    #[arg(long)]
    delta: String,
}

#[derive(Args, Debug)]
struct SeriesArgs {
    #[arg(short = 'a', long)]
    algebra: PathBuf,
    #[arg(long)]
    kind: Option<SeriesKind>,
    /// Defaults to the total congruence.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, default_value_t = 8)]
    max: usize,
    /// Evaluate a commutator term at α and compare it with the dimension-n series.
    #[arg(long)]
    term: Option<String>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(short = 'a', long)]
    algebra: PathBuf,
    #[arg(long)]
    property: Property,
    #[arg(long, default_value_t = 8)]
    max: usize,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Finite algebra file; use with one -c per axis.
    #[arg(short = 'a', long, conflicts_with = "an", required_unless_present = "an")]
    algebra: Option<PathBuf>,
    #[arg(short = 'c', long = "con")]
    cons: Vec<String>,
    /// Generate over A_N instead, seeded with pairs of r[i]^[j], i <= imax, j <= jmax.
    #[arg(long)]
    an: Option<usize>,
    /// Matrix dimension for A_N (defaults to N).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 1)]
    imax: u64,
    #[arg(long, default_value_t = 0)]
    jmax: u64,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Print every cube with its provenance.
    #[arg(long)]
    dump: bool,
}

#[derive(Args, Debug)]
struct PaperArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_parser = ["injectivity", "successors", "generators", "witness", "supernilpotence", "two-generator"])]
    lemma: String,
    #[arg(long, default_value_t = 2)]
    imax: u64,
    #[arg(long, default_value_t = 2)]
    jmax: u64,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    gsamples: usize,
}

/// What a subcommand hands back: its report and the exit status it implies.
struct Outcome {
    text: String,
    json: Value,
    code: u8,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Self {
        Outcome { text, json, code: 0 }
    }
}

fn load(path: &PathBuf) -> Result<FiniteAlgebra, Error> {
    FiniteAlgebra::load(path)
}

fn partitions(a: &FiniteAlgebra, texts: &[String]) -> Result<Vec<Partition>, Error> {
    texts.iter().map(|t| partition(a, t)).collect()
}

fn partition(a: &FiniteAlgebra, text: &str) -> Result<Partition, Error> {
    let p = Partition::parse(text)?;
    if p.size() != a.size() {
        return Err(Error::Validation(format!(
            "partition {text} covers {} elements, algebra has {}",
            p.size(),
            a.size()
        )));
    }
    Ok(p)
}

fn limits(cli: &Cli) -> Limits {
    Limits {
        cube_cap: resolved_cap(cli),
        ..Limits::default()
    }
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Holds { .. } => 0,
        Verdict::Inconclusive { .. } => 3,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let lim = limits(cli);
    match &cli.command {
        Command::Commutator(args) => {
            let a = load(&args.theta.algebra)?;
            let thetas = partitions(&a, &args.theta.cons)?;
            let sigma = args.theta.sigma.as_deref();
            let c = higher_commutator_with(&a, &thetas, sigma, &lim)?;
            let mut text = c.to_string();
            let mut js = json!({ "commutator": c.to_string() });
            let mut code = 0;
            if args.oracle {
                let o = higher_commutator_oracle_with(&a, &thetas, sigma, &lim)?;
                let agree = o == c;
                text.push_str(&format!("\noracle: {o}\nagree: {agree}"));
                js["oracle"] = json!(o.to_string());
                js["agree"] = json!(agree);
                code = u8::from(!agree);
            }
            if args.diagnostic.is_some() {
                let r = hc8_diagnostic(&a, &thetas, args.split, &lim)?;
                text.push_str(&format!(
                    "\nhc8 (m={}): nested {} flat {} holds: {}",
                    args.split, r.nested, r.flat, r.holds
                ));
                js["hc8"] = json!({
                    "split": args.split,
                    "nested": r.nested.to_string(),
                    "flat": r.flat.to_string(),
                    "holds": r.holds,
                });
            }
            Ok(Outcome { text, json: js, code })
        }
        Command::OracleCommutator(args) => {
            let a = load(&args.algebra)?;
            let thetas = partitions(&a, &args.cons)?;
            let o = higher_commutator_oracle_with(&a, &thetas, args.sigma.as_deref(), &lim)?;
            Ok(Outcome::ok(o.to_string(), json!({ "commutator": o.to_string() })))
        }
        Command::Centrality(args) => {
            let a = load(&args.theta.algebra)?;
            let thetas = partitions(&a, &args.theta.cons)?;
            let delta = partition(&a, &args.delta)?;
            let r = centrality_with(&a, &thetas, args.theta.sigma.as_deref(), &delta, &lim)?;
            let witness = r.counterexample.as_ref().map(|v| (v.cube.to_string(), v.pivot));
            let text = match &witness {
                None => "holds".to_string(),
                Some((cube, (x, y))) => format!("fails\ncube: {cube}\npivot: ({x}, {y})"),
            };
            let js = json!({
                "holds": r.holds,
                "cube": witness.as_ref().map(|w| w.0.clone()),
                "pivot": witness.as_ref().map(|w| [w.1 .0, w.1 .1]),
            });
            Ok(Outcome {
                text,
                json: js,
                code: u8::from(!r.holds),
            })
        }
        Command::Series(args) => {
            let a = load(&args.algebra)?;
            let alpha = match &args.alpha {
                Some(t) => partition(&a, t)?,
                None => Partition::total(a.size()),
            };
            if args.kind.is_none() && args.term.is_none() {
                return Err(Error::Validation("series needs --kind or --term".into()));
            }
            let mut text = Vec::new();
            let mut js = json!({ "alpha": alpha.to_string() });
            if let Some(kind) = args.kind {
                let r = series(&a, kind, &alpha, args.max, &lim)?;
                text.push(r.to_string());
                js["series"] = json!({
                    "kind": kind.to_string(),
                    "steps": r.steps.iter().map(Partition::to_string).collect::<Vec<_>>(),
                    "stabilized": r.stabilized,
                    "reached_zero": r.reached_zero,
                });
            }
            let mut code = 0;
            if let Some(t) = &args.term {
                let term = parse_term(t, usize::MAX)?;
                let n = term.max_arity().max(2);
                let value = eval_term(&a, &term, &alpha, &lim)?;
                let r = lemma31_bound_check(&a, &term, &alpha, n, &lim)?;
                text.push(format!(
                    "term {term}: {value}\nbound [alpha]^{n}_{}: {} <= term: {}",
                    r.m, r.series_term, r.holds
                ));
                js["term"] = json!({
                    "term": term.to_string(),
                    "value": value.to_string(),
                    "n": n,
                    "m": r.m,
                    "series_term": r.series_term.to_string(),
                    "bound_holds": r.holds,
                });
                code = u8::from(!r.holds);
            }
            Ok(Outcome {
                text: text.join("\n"),
                json: js,
                code,
            })
        }
        Command::Check(args) => {
            let a = load(&args.algebra)?;
            let v = check(&a, args.property, args.max, &lim)?;
            let code = verdict_code(&v);
            Ok(Outcome {
                text: v.to_string(),
                json: json!({ "property": args.property.to_string(), "verdict": v.to_string(), "holds": code == 0 }),
                code,
            })
        }
        Command::GenMatrices(args) => gen_matrices(cli, args, &lim),
        Command::Paper(args) => {
            let b = Bounds {
                i_max: args.imax,
                j_max: args.jmax,
                depth: args.depth,
                g_samples: args.gsamples,
                cube_cap: resolved_cap(cli) as usize,
            };
            let log = run_lemma(&args.lemma, args.n, &b)?;
            let json = serde_json::to_value(&log).expect("plain data serializes");
            Ok(Outcome {
                text: log.render().trim_end().to_string(),
                json,
                code: u8::from(!log.passed()),
            })
        }
    }
}

fn gen_matrices(cli: &Cli, args: &GenArgs, lim: &Limits) -> Result<Outcome, Error> {
    if let Some(path) = &args.algebra {
        let a = load(path)?;
        let thetas = partitions(&a, &args.cons)?;
        if thetas.is_empty() {
            return Err(Error::Validation("gen-matrices needs one -c per axis".into()));
        }
        let m = generate_full_capped(&a, &thetas, lim.cube_cap)?;
        let mut text = format!("cubes: {}\ngenerators: {}", m.len(), m.generator_count());
        let cubes: Vec<String> = (0..m.len()).map(|k| m.to_cube(k).to_string()).collect();
        if args.dump {
            text.push('\n');
            text.push_str(m.dump(&a).trim_end());
        }
        let mut js = json!({ "dim": m.dim(), "cubes": m.len(), "generators": m.generator_count() });
        if args.dump {
            js["matrices"] = json!(cubes);
        }
        return Ok(Outcome::ok(text, js));
    }
    let n = args.an.expect("clap requires --an without --algebra");
    let a = an_algebra(n)?;
    let dim = args.dim.unwrap_or(n);
    let seeds: Vec<Element> = (0..=args.jmax)
        .flat_map(|j| (0..=args.imax).map(move |i| Element::r(i, j)))
        .collect();
    let pairs: Vec<(Element, Element)> = seeds
        .iter()
        .flat_map(|x| seeds.iter().map(move |y| (x.clone(), y.clone())))
        .collect();
    let mut ev = Evaluator::new(&a);
    let cap = resolved_cap(cli) as usize;
    let m = generate_bounded(&mut ev, &vec![pairs; dim], args.depth, cap)?;
    let levels: Vec<usize> = (0..=m.depth()).map(|k| m.level_end(k)).collect();
    let mut text = format!("cubes: {}\nlevels: {levels:?}", m.len());
    let mut js = json!({ "dim": dim, "cubes": m.len(), "levels": levels });
    if args.dump {
        text.push('\n');
        text.push_str(m.dump(&ev).trim_end());
        let cubes: Vec<String> = (0..m.len()).map(|k| m.to_cube(&ev, k).to_string()).collect();
        js["matrices"] = json!(cubes);
    }
    Ok(Outcome::ok(text, js))
}

/// The cap a run will actually use: finite runs bound the matrix space,
/// `A_n` runs bound the number of stored cubes.
fn resolved_cap(cli: &Cli) -> u64 {
    let an_run = match &cli.command {
        Command::Paper(_) => true,
        Command::GenMatrices(g) => g.an.is_some(),
        _ => false,
    };
    match (cli.cube_cap, an_run) {
        (Some(c), _) => c,
        (None, true) => Bounds::default().cube_cap as u64,
        (None, false) => DEFAULT_FINITE_CAP,
    }
}

fn echo_config(cli: &Cli) {
    let cap = resolved_cap(cli);
    eprintln!(
        "config: command={:?} cube_cap={cap} seed={} format={:?} threads={}",
        cli.command, cli.seed, cli.format, cli.threads
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            // clap already prefixes its errors with `error:`.
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    echo_config(&cli);
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(out) => {
            let body = match cli.format {
                Format::Text => out.text,
                Format::Json => serde_json::to_string_pretty(&out.json).expect("json value"),
            };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{body}");
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_cap() { 3 } else { 2 })
        }
    }
}
