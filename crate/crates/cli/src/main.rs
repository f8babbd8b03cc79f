use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use rwpe::baseline::{rule_counts, trace_cost, Baseline, Builtins};
use rwpe::bench::{self, BenchConfig, EngineKind, Family};
use rwpe::bounds::{analyze, BoundsEnv, Interval, Range};
use rwpe::denote::denote;
use rwpe::engine::{rewrite_top, EngineConfig};
use rwpe::expr::Var;
use rwpe::gen::{random_in_bounds, random_valuation};
use rwpe::side_cond::check_rule_wf;
use rwpe::syntax::{parse_rule_file_in, parse_term_in, print_expr_with, PrintOptions, RuleFile, Scope};
use rwpe::typing::TypeEnv;
use rwpe::{stdlib, ObjType, RuleSet, Symbol};

#[derive(Parser)]
#[command(name = "rwpe", version, about = "Rewriting with normalization by evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check every rule in a rule file for well-formedness.
    Check { rules: PathBuf },
    /// Normalize a term.
    Rewrite(RewriteArgs),
    /// Infer intervals for straightline code and insert clips.
    AnalyzeBounds {
        /// Term file, or `-` for stdin.
        #[arg(default_value = "-")]
        term: String,
        /// `name=lo..hi`, upper bound exclusive.
        #[arg(long = "bounds", value_name = "VAR=LO..HI")]
        bounds: Vec<String>,
    },
    /// Time a benchmark family and write CSV.
    Bench(BenchArgs),
    /// Print the bundled rule library.
    Stdlib,
}

#[derive(Args)]
struct RewriteArgs {
    /// Term file, or `-` for stdin.
    #[arg(default_value = "-")]
    term: String,
    /// Rule files; the bundled library is used when none is given.
    #[arg(long = "rules", value_name = "PATH")]
    rules: Vec<PathBuf>,
    #[arg(long, default_value = "nbe")]
    engine: String,
    /// Compare denotations on this many random valuations.
    #[arg(long, num_args = 0..=1, default_missing_value = "20")]
    verify: Option<usize>,
    /// Print the naive engine's steps.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    fuel: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 10_000_000)]
    max_steps: usize,
    #[arg(long)]
    no_inline_constants: bool,
    #[arg(long)]
    no_inline_variables: bool,
    /// Run the bounds pre-pass with these declarations first.
    #[arg(long = "bounds", value_name = "VAR=LO..HI")]
    bounds: Vec<String>,
    /// Print statistics to stderr.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value = "nbe")]
    engine: String,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    m: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{err}")]
    Parse { path: String, err: rwpe::syntax::ParseError },
    #[error("{path}: {err}")]
    Io { path: String, err: io::Error },
    /// Verification or well-formedness failure.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            _ => 2,
        }
    }
}

fn read_input(path: &str) -> Result<String, CliError> {
    let io_err = |err| CliError::Io { path: path.to_string(), err };
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(io_err)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(io_err)
    }
}

fn load_rule_file(path: &Path, known: &[std::sync::Arc<Symbol>]) -> Result<RuleFile, CliError> {
    let p = path.display().to_string();
    let src = read_input(&p)?;
    parse_rule_file_in(&src, known).map_err(|err| CliError::Parse { path: p, err })
}

fn load_rules(paths: &[PathBuf]) -> Result<RuleSet, CliError> {
    if paths.is_empty() {
        return Ok(stdlib::standard());
    }
    let mut set = RuleSet::empty();
    for p in paths {
        let f = load_rule_file(p, &set.symbols)?;
        for r in &f.rules {
            let errs = check_rule_wf(r);
            if !errs.is_empty() {
                return Err(CliError::Failed(format!("{}: rule `{}`: {}", p.display(), r.name, errs[0])));
            }
        }
        let more = f.into_rule_set().map_err(|e| CliError::Failed(format!("{}: {e}", p.display())))?;
        set = set.extend(&more).map_err(|e| CliError::Failed(e.to_string()))?;
    }
    Ok(set)
}

fn cmd_check(path: &Path) -> Result<(), CliError> {
    let f = load_rule_file(path, &[])?;
    let mut bad = 0;
    for (r, (line, col)) in f.rules.iter().zip(&f.positions) {
        let errs = check_rule_wf(r);
        if errs.is_empty() {
            println!("ok    {}", r.name);
        } else {
            bad += 1;
            for e in errs {
                println!("error {} ({}:{line}:{col}): {e}", r.name, path.display());
            }
        }
    }
    if bad > 0 {
        return Err(CliError::Failed(format!("{bad} rule(s) failed")));
    }
    if let Err(e) = f.into_rule_set() {
        return Err(CliError::Failed(e.to_string()));
    }
    Ok(())
}

fn parse_bounds(decls: &[String], free: &[(Var, ObjType)]) -> Result<BoundsEnv, CliError> {
    let mut env = BoundsEnv::new();
    for d in decls {
        let bad = || CliError::Usage(format!("bad bounds declaration `{d}`, expected VAR=LO..HI"));
        let (name, range) = d.split_once('=').ok_or_else(bad)?;
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let lo: BigInt = lo.trim().parse().map_err(|_| bad())?;
        let hi: BigInt = hi.trim().parse().map_err(|_| bad())?;
        let iv = Interval::new(lo, hi).ok_or_else(|| CliError::Usage(format!("empty interval in `{d}`")))?;
        let (v, _) = free
            .iter()
            .find(|(v, _)| &*v.name == name.trim())
            .ok_or_else(|| CliError::Usage(format!("`{}` is not a free variable of the term", name.trim())))?;
        env.insert(v.id, Range::Known(iv));
    }
    Ok(env)
}

fn print_opts(free: &[(Var, ObjType)]) -> PrintOptions {
    PrintOptions { free_types: free.iter().map(|(v, t)| (v.id, t.clone())).collect(), ..PrintOptions::default() }
}

fn cmd_rewrite(a: &RewriteArgs) -> Result<(), CliError> {
    let engine: EngineKind = a.engine.parse().map_err(CliError::Usage)?;
    let rules = load_rules(&a.rules)?;
    let src = read_input(&a.term)?;
    let mut scope = Scope::new();
    for s in &rules.symbols {
        scope = scope.with_symbol(s.clone());
    }
    let el = parse_term_in(&src, &scope).map_err(|err| CliError::Parse { path: a.term.clone(), err })?;
    let free = el.free.clone();
    let env: TypeEnv = free.iter().map(|(v, t)| (v.id, t.clone())).collect();
    let declared = parse_bounds(&a.bounds, &free)?;
    let input = if declared.is_empty() {
        el.expr.clone()
    } else {
        analyze(&el.expr, &declared).map_err(|e| CliError::Failed(e.to_string()))?.clipped
    };
    let stats_text;
    let output = match engine {
        EngineKind::Nbe => {
            let mut cfg = EngineConfig {
                inline_constants: !a.no_inline_constants,
                inline_variables: !a.no_inline_variables,
                ..EngineConfig::default()
            };
            if let Some(f) = a.fuel {
                cfg.fuel = f;
            }
            if let Some(b) = a.budget {
                cfg.budget = b;
            }
            let (out, st) = rewrite_top(&input, &env, &rules, &cfg).map_err(|e| CliError::Failed(e.to_string()))?;
            stats_text = st.to_kv();
            out
        }
        EngineKind::Naive(order) => {
            let b = Baseline::new(&rules, Builtins::ALL, order);
            let (out, trace) = b.rewrite_exhaustive(&input, a.max_steps).map_err(|e| CliError::Failed(e.to_string()))?;
            if a.trace {
                for s in &trace {
                    let path: Vec<String> = s.path.iter().map(|i| i.to_string()).collect();
                    eprintln!(
                        "step {} at [{}] {} -> {} (goal {})",
                        s.rule,
                        path.join(","),
                        s.before_size,
                        s.after_size,
                        s.goal_size
                    );
                }
            }
            let cost = trace_cost(&trace);
            let mut s = format!("trace_steps={}\ntrace_goal_size={}\n", cost.steps, cost.total_goal_size);
            for (k, v) in rule_counts(&trace) {
                s.push_str(&format!("rule.{k}={v}\n"));
            }
            stats_text = s;
            out
        }
    };
    println!("{}", print_expr_with(&output, &print_opts(&free)).text);
    if a.stats {
        eprint!("{stats_text}");
    }
    if let Some(k) = a.verify {
        let mut rng = ChaCha8Rng::seed_from_u64(bench::seed_from_env());
        for i in 0..k {
            let mut rho = random_valuation(&free, &mut rng);
            // clips only promise agreement inside the declared bounds
            let inside: Vec<_> = free
                .iter()
                .filter_map(|(v, _)| match declared.get(&v.id) {
                    Some(Range::Known(i)) => Some((v.clone(), i.lo.clone(), i.hi.clone())),
                    _ => None,
                })
                .collect();
            rho.extend(random_in_bounds(&inside, &mut rng));
            let before = denote(&el.expr, &rho);
            let after = denote(&output, &rho);
            match (before, after) {
                (Ok(x), Ok(y)) if x == y => {}
                (x, y) => {
                    eprintln!("verify: valuation {i} disagrees: {x:?} vs {y:?}");
                    return Err(CliError::Failed("verification failed".into()));
                }
            }
        }
        eprintln!("verify: ok ({k} valuations)");
    }
    Ok(())
}

fn cmd_analyze(term: &str, decls: &[String]) -> Result<(), CliError> {
    let src = read_input(term)?;
    let el = parse_term_in(&src, &Scope::new()).map_err(|err| CliError::Parse { path: term.to_string(), err })?;
    let b = parse_bounds(decls, &el.free)?;
    let an = analyze(&el.expr, &b).map_err(|e| CliError::Failed(e.to_string()))?;
    println!("{}", print_expr_with(&an.clipped, &print_opts(&el.free)).text);
    for (v, r) in &an.let_ranges {
        match r.known() {
            Some(i) => eprintln!("{} : {i}", v.name),
            None => eprintln!("{} : {r:?}", v.name),
        }
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let family: Family = a.family.parse().map_err(CliError::Usage)?;
    let engine: EngineKind = a.engine.parse().map_err(CliError::Usage)?;
    let grid: Vec<(usize, usize)> = a.n.iter().flat_map(|&n| a.m.iter().map(move |&m| (n, m))).collect();
    let cfg = BenchConfig { repetitions: a.repetitions, ..BenchConfig::default() };
    let records = bench::run_family(family, engine, &grid, &stdlib::standard(), &cfg);
    let write = |w: &mut dyn Write| bench::write_csv(&records, w);
    let res = match &a.out {
        Some(p) => {
            let f = fs::File::create(p).map_err(|err| CliError::Io { path: p.display().to_string(), err })?;
            write(&mut io::BufWriter::new(f))
        }
        None => write(&mut io::stdout().lock()),
    };
    res.map_err(|e| CliError::Failed(e.to_string()))?;
    let failed = records.iter().filter(|r| !r.ok()).count();
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} cell(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let res = match &cli.cmd {
        Cmd::Check { rules } => cmd_check(rules),
        Cmd::Rewrite(a) => cmd_rewrite(a),
        Cmd::AnalyzeBounds { term, bounds } => cmd_analyze(term, bounds),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Stdlib => {
            print!("{}", stdlib::all_sources());
            Ok(())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
