//! Timed runs of the benchmark families, CSV output and log-log fits.

use std::fmt;
use std::io;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{lift_steps, trace_cost, Baseline, Builtins, Order};
use crate::denote::denote;
use crate::engine::{rewrite_top, EngineConfig};
use crate::expr::{alpha_eq, term_stats, Expr};
use crate::gen::{self, Generated};
use crate::pattern::RuleSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Plus0Tree,
    UnderletsPlus0,
    LiftletsMap,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Plus0Tree, Family::UnderletsPlus0, Family::LiftletsMap];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Plus0Tree => "plus0tree",
            Family::UnderletsPlus0 => "underlets_plus0",
            Family::LiftletsMap => "liftlets_map",
        })
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Family::ALL.into_iter().find(|f| f.to_string() == s).ok_or_else(|| format!("unknown family `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Nbe,
    Naive(Order),
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] =
        [EngineKind::Nbe, EngineKind::Naive(Order::Topdown), EngineKind::Naive(Order::Bottomup)];
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Nbe => "nbe",
            EngineKind::Naive(Order::Topdown) => "naive-topdown",
            EngineKind::Naive(Order::Bottomup) => "naive-bottomup",
        })
    }
}

impl FromStr for EngineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        EngineKind::ALL.into_iter().find(|e| e.to_string() == s).ok_or_else(|| format!("unknown engine `{s}`"))
    }
}

/// One row of the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub family: String,
    pub engine: String,
    pub n: usize,
    pub m: usize,
    pub wall_time_s: f64,
    pub rule_apps: u64,
    pub nodes_visited: u64,
    pub lets_lifted: u64,
    pub trace_steps: u64,
    pub trace_goal_size: u64,
    pub output_lets: u64,
    pub status: String,
}

impl BenchRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

pub const CSV_HEADER: &str =
    "family,engine,n,m,wall_time_s,rule_apps,nodes_visited,lets_lifted,trace_steps,trace_goal_size,output_lets,status";

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub repetitions: usize,
    /// Run once untimed before the timed repetitions.
    pub warmup: bool,
    pub engine: EngineConfig,
    pub max_steps: usize,
    pub cell_timeout: Duration,
    /// Valuations for the denote check.
    pub valuations: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            repetitions: 3,
            warmup: true,
            engine: EngineConfig::default(),
            max_steps: 10_000_000,
            cell_timeout: Duration::from_secs(120),
            valuations: 5,
            seed: seed_from_env(),
        }
    }
}

/// `RF_SEED` if set and numeric, else 0.
pub fn seed_from_env() -> u64 {
    std::env::var("RF_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

/// The benchmark term for a cell. The list family is wrapped in a
/// consumer so its lets have to be lifted.
pub fn instance(family: Family, n: usize, m: usize) -> Generated {
    match family {
        Family::Plus0Tree => gen::gen_plus0tree(n, m),
        Family::UnderletsPlus0 => gen::gen_underlets_plus0(n.max(1)),
        Family::LiftletsMap => {
            let g = gen::gen_liftlets(n, m);
            Generated { expr: gen::copy_goal(g.expr), free: g.free }
        }
    }
}

pub fn expected_normal_form(family: Family, n: usize, m: usize, g: &Generated) -> Expr {
    let x = &g.free[0].0;
    match family {
        Family::Plus0Tree => gen::plus0tree_normal_form(n, x),
        Family::UnderletsPlus0 => Expr::var(x),
        Family::LiftletsMap => gen::liftlets_normal_form(n, m, x),
    }
}

struct Outcome {
    output: Expr,
    record: BenchRecord,
}

fn run_once(
    family: Family,
    engine: EngineKind,
    n: usize,
    m: usize,
    g: &Generated,
    rules: &RuleSet,
    cfg: &BenchConfig,
) -> Result<Outcome, String> {
    let mut rec = BenchRecord {
        family: family.to_string(),
        engine: engine.to_string(),
        n,
        m,
        wall_time_s: 0.0,
        rule_apps: 0,
        nodes_visited: 0,
        lets_lifted: 0,
        trace_steps: 0,
        trace_goal_size: 0,
        output_lets: 0,
        status: "ok".into(),
    };
    let start = Instant::now();
    let output = match engine {
        EngineKind::Nbe => {
            let ecfg = EngineConfig { collect_stats: false, ..cfg.engine.clone() };
            let (out, st) = rewrite_top(&g.expr, &g.type_env(), rules, &ecfg).map_err(|e| e.to_string())?;
            rec.wall_time_s = start.elapsed().as_secs_f64();
            rec.rule_apps = st.total_rule_applications();
            rec.nodes_visited = st.nodes_visited;
            rec.lets_lifted = st.lets_lifted;
            out
        }
        EngineKind::Naive(order) => {
            let b = Baseline::new(rules, Builtins::ALL, order);
            let (out, trace) = b.rewrite_exhaustive(&g.expr, cfg.max_steps).map_err(|e| e.to_string())?;
            rec.wall_time_s = start.elapsed().as_secs_f64();
            let cost = trace_cost(&trace);
            let user: u64 =
                trace.iter().filter(|s| rules.rules.iter().any(|r| r.name == s.rule)).count() as u64;
            rec.rule_apps = user;
            rec.lets_lifted = lift_steps(&trace);
            rec.trace_steps = cost.steps as u64;
            rec.trace_goal_size = cost.total_goal_size;
            out
        }
    };
    rec.output_lets = term_stats(&output).let_count as u64;
    Ok(Outcome { output, record: rec })
}

/// Checks an output against the family's normal form and the denote
/// oracle. The naive engines have no rule for lifting lets out of list
/// tails, so on the list family only the let count is compared.
#[allow(clippy::too_many_arguments)]
pub fn verify(
    family: Family,
    engine: EngineKind,
    n: usize,
    m: usize,
    g: &Generated,
    output: &Expr,
    valuations: usize,
    seed: u64,
) -> Result<(), String> {
    let expected = expected_normal_form(family, n, m, g);
    let shape_ok = match (family, engine) {
        (Family::LiftletsMap, EngineKind::Naive(_)) => term_stats(output).let_count == n * m,
        _ => alpha_eq(output, &expected),
    };
    if !shape_ok {
        return Err("output differs from the expected normal form".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..valuations {
        let rho = gen::random_valuation(&g.free, &mut rng);
        let a = denote(&g.expr, &rho).map_err(|e| e.to_string())?;
        let b = denote(output, &rho).map_err(|e| e.to_string())?;
        if a != b {
            return Err("denotation changed".into());
        }
    }
    Ok(())
}

/// Times one cell: optional warm-up, then the median of the repetitions.
/// Failures are recorded in `status` rather than raised.
pub fn run_cell(
    family: Family,
    engine: EngineKind,
    n: usize,
    m: usize,
    rules: &RuleSet,
    cfg: &BenchConfig,
) -> BenchRecord {
    let g = instance(family, n, m);
    let failed = |status: String| BenchRecord {
        family: family.to_string(),
        engine: engine.to_string(),
        n,
        m,
        wall_time_s: f64::NAN,
        rule_apps: 0,
        nodes_visited: 0,
        lets_lifted: 0,
        trace_steps: 0,
        trace_goal_size: 0,
        output_lets: 0,
        status,
    };
    let first = match run_once(family, engine, n, m, &g, rules, cfg) {
        Ok(o) => o,
        Err(e) => return failed(format!("failed: {e}")),
    };
    if let Err(e) = verify(family, engine, n, m, &g, &first.output, cfg.valuations, cfg.seed) {
        return failed(format!("failed: {e}"));
    }
    let started = Instant::now();
    let mut times = Vec::new();
    if !cfg.warmup {
        times.push(first.record.wall_time_s);
    }
    while times.len() < cfg.repetitions.max(1) {
        if started.elapsed() > cfg.cell_timeout {
            return failed("failed: timeout".into());
        }
        match run_once(family, engine, n, m, &g, rules, cfg) {
            Ok(o) => times.push(o.record.wall_time_s),
            Err(e) => return failed(format!("failed: {e}")),
        }
    }
    times.sort_by(f64::total_cmp);
    BenchRecord { wall_time_s: times[times.len() / 2], ..first.record }
}

/// Every cell of a parameter grid.
pub fn run_family(
    family: Family,
    engine: EngineKind,
    grid: &[(usize, usize)],
    rules: &RuleSet,
    cfg: &BenchConfig,
) -> Vec<BenchRecord> {
    grid.iter().map(|&(n, m)| run_cell(family, engine, n, m, rules, cfg)).collect()
}

pub fn write_csv<W: io::Write>(records: &[BenchRecord], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    if records.is_empty() {
        wtr.write_record(CSV_HEADER.split(','))?;
    }
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(r: R) -> Result<Vec<BenchRecord>, csv::Error> {
    csv::Reader::from_reader(r).deserialize().collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fit {
    pub exponent: f64,
    pub r_squared: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 4 points, got {0}")]
    InsufficientData(usize),
    #[error("sizes and values must be positive")]
    NonPositive,
    #[error("all sizes are equal")]
    Degenerate,
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<Fit, FitError> {
    if points.len() < 4 {
        return Err(FitError::InsufficientData(points.len()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(FitError::NonPositive);
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let exponent = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(Fit { exponent, r_squared })
}

/// Fits one column of successful records against `n`.
pub fn fit_records(records: &[BenchRecord], column: impl Fn(&BenchRecord) -> f64) -> Result<Fit, FitError> {
    let pts: Vec<(f64, f64)> = records.iter().filter(|r| r.ok()).map(|r| (r.n as f64, column(r))).collect();
    fit_scaling(&pts)
}
