//! Rewriting fused with normalization by evaluation.
//!
//! Terms are evaluated into a semantic domain: host closures at arrow
//! types, residual syntax at base types. Let bindings that must stay are
//! written to a telescope owned by the nearest enclosing binder, so lets are
//! lifted out of argument positions as a side effect of evaluation order.
//! Whenever a base-typed identifier application becomes saturated, the
//! compiled rule set is tried at its root.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{has_unique_binders, refresh_binders, Expr, ExprKind, Var, VarId};
use crate::ident::Ident;
use crate::pattern::{eval_decision_tree, is_constant, MatchError, RuleSet};
use crate::side_cond::{cond_value_of, CondError, CondValue};
use crate::types::ObjType;
use crate::typing::{type_check, TypeEnv, TypeError};

const RED_ZONE: usize = 64 * 1024;
const STACK_CHUNK: usize = 4 * 1024 * 1024;
/// Largest literal `nat_rect` unfolds; larger counts stay residual.
const NAT_UNFOLD_LIMIT: i128 = 1 << 24;

#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Maximum nesting of rule applications, where each one fires while
    /// the right-hand side of another is being reduced.
    pub fuel: usize,
    /// Total rule applications allowed in one run.
    pub budget: u64,
    pub inline_constants: bool,
    pub inline_variables: bool,
    /// Bind each element of a let-bound list literal separately and inline
    /// the list spine.
    pub name_cons_cells: bool,
    /// Record every term handed to the head rewriter.
    pub collect_stats: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            fuel: 10_000,
            budget: 10_000_000,
            inline_constants: true,
            inline_variables: true,
            name_cons_cells: true,
            collect_stats: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RewriteStats {
    pub rule_applications: BTreeMap<String, u64>,
    pub nodes_visited: u64,
    /// Let bindings written to a telescope.
    pub lets_lifted: u64,
    pub lets_inlined: u64,
    pub eliminator_steps: u64,
    /// Terms offered to the head rewriter, in order. Only filled when
    /// `collect_stats` is set.
    pub heads: Vec<Expr>,
}

impl RewriteStats {
    pub fn total_rule_applications(&self) -> u64 {
        self.rule_applications.values().sum()
    }

    pub fn absorb(&mut self, other: RewriteStats) {
        for (k, v) in other.rule_applications {
            *self.rule_applications.entry(k).or_default() += v;
        }
        self.nodes_visited += other.nodes_visited;
        self.lets_lifted += other.lets_lifted;
        self.lets_inlined += other.lets_inlined;
        self.eliminator_steps += other.eliminator_steps;
        self.heads.extend(other.heads);
    }

    /// One `key=value` per line; rule counts appear as `rule.<name>=<n>`.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rule_apps={}", self.total_rule_applications());
        for (k, v) in &self.rule_applications {
            let _ = writeln!(s, "rule.{k}={v}");
        }
        let _ = writeln!(s, "nodes_visited={}", self.nodes_visited);
        let _ = writeln!(s, "lets_lifted={}", self.lets_lifted);
        let _ = writeln!(s, "lets_inlined={}", self.lets_inlined);
        let _ = writeln!(s, "eliminator_steps={}", self.eliminator_steps);
        s
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("fuel exhausted: {depth} nested rule applications, last `{rule}`")]
    FuelExhausted { rule: String, depth: usize },
    #[error("rule application budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Condition(#[from] CondError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Pending let bindings, outermost first.
pub type Telescope = Vec<(Var, Expr)>;

type SemFn = dyn Fn(&mut Engine<'_>, Sem, &mut Telescope) -> Result<Sem, EngineError>;

/// Semantic values: residual syntax at base types, closures at arrows.
/// The string is a name hint for the binder created when reifying.
#[derive(Clone)]
pub enum Sem {
    Base(Expr),
    Fun(Arc<str>, Rc<SemFn>),
}

impl Sem {
    pub fn expect_base(&self) -> Result<&Expr, EngineError> {
        match self {
            Sem::Base(e) => Ok(e),
            Sem::Fun(..) => Err(EngineError::Internal("expected a base value, found a function".into())),
        }
    }

    fn fun(hint: &str, f: impl Fn(&mut Engine<'_>, Sem, &mut Telescope) -> Result<Sem, EngineError> + 'static) -> Sem {
        Sem::Fun(hint.into(), Rc::new(f))
    }
}

pub type SemEnv = im::HashMap<VarId, Sem>;

/// Wraps `body` in the telescope's bindings.
pub fn wrap_lets(binds: Telescope, body: Expr) -> Expr {
    binds.into_iter().rev().fold(body, |acc, (v, r)| Expr::let_in(v, r, acc))
}

fn cons_parts(e: &Expr) -> Option<(Expr, Expr)> {
    if let ExprKind::App(f, t) = e.kind() {
        if let ExprKind::App(c, h) = f.kind() {
            if let Some(Ident::Cons(_)) = c.as_ident() {
                return Some((h.clone(), t.clone()));
            }
        }
    }
    None
}

fn head_is_var(e: &Expr) -> bool {
    let mut cur = e;
    while let ExprKind::App(f, _) = cur.kind() {
        cur = f;
    }
    matches!(cur.kind(), ExprKind::Var(_))
}

/// Type of the `n`th argument of a curried function type.
fn arg_type(t: &ObjType, n: usize) -> Result<ObjType, EngineError> {
    let mut cur = t;
    for _ in 0..n {
        match cur {
            ObjType::Arrow(_, cod) => cur = cod,
            ObjType::Base(_) => return Err(EngineError::Internal(format!("{t} has no argument {n}"))),
        }
    }
    match cur {
        ObjType::Arrow(dom, _) => Ok((**dom).clone()),
        ObjType::Base(_) => Err(EngineError::Internal(format!("{t} has no argument {n}"))),
    }
}

/// State of one rewriting run.
pub struct Engine<'r> {
    rules: &'r RuleSet,
    cfg: EngineConfig,
    pub stats: RewriteStats,
    /// Types of variables that may occur free in residual terms; only
    /// arrow types matter.
    types: HashMap<VarId, ObjType>,
    depth: usize,
    applied: u64,
}

impl<'r> Engine<'r> {
    pub fn new(rules: &'r RuleSet, cfg: EngineConfig, free_types: &TypeEnv) -> Self {
        let types = free_types
            .iter()
            .filter(|(_, t)| matches!(t, ObjType::Arrow(..)))
            .map(|(k, t)| (*k, t.clone()))
            .collect();
        Engine { rules, cfg, stats: RewriteStats::default(), types, depth: 0, applied: 0 }
    }

    pub fn reduce(&mut self, e: &Expr, env: &SemEnv, out: &mut Telescope) -> Result<Sem, EngineError> {
        stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || self.reduce_inner(e, env, out))
    }

    fn reduce_inner(&mut self, e: &Expr, env: &SemEnv, out: &mut Telescope) -> Result<Sem, EngineError> {
        self.stats.nodes_visited += 1;
        match e.kind() {
            ExprKind::Var(v) => match env.get(&v.id) {
                Some(s) => Ok(s.clone()),
                None => match self.types.get(&v.id).cloned() {
                    Some(t) => self.reflect(e.clone(), &t, out),
                    None => Ok(Sem::Base(e.clone())),
                },
            },
            ExprKind::Ident(i) => self.reflect_ident(i, out),
            ExprKind::Abs(v, _, body) => {
                let (env, id, body) = (env.clone(), v.id, body.clone());
                Ok(Sem::Fun(
                    v.name.clone(),
                    Rc::new(move |en, x, out| en.reduce(&body, &env.update(id, x), out)),
                ))
            }
            ExprKind::App(f, a) => {
                let fs = self.reduce(f, env, out)?;
                let av = self.reduce(a, env, out)?;
                self.apply(&fs, av, out)
            }
            ExprKind::LetIn(..) => {
                let mut env = env.clone();
                let mut cur = e;
                while let ExprKind::LetIn(v, rhs, body) = cur.kind() {
                    if !cur.ptr_eq(e) {
                        self.stats.nodes_visited += 1;
                    }
                    let s = self.reduce(rhs, &env, out)?;
                    let s = self.bind_let(v, s, out);
                    env.insert(v.id, s);
                    cur = body;
                }
                self.reduce(cur, &env, out)
            }
        }
    }

    /// Inlining policy for a reduced let right-hand side.
    fn bind_let(&mut self, v: &Var, s: Sem, out: &mut Telescope) -> Sem {
        let r = match s {
            Sem::Fun(..) => {
                self.stats.lets_inlined += 1;
                return s;
            }
            Sem::Base(r) => r,
        };
        if (self.cfg.inline_constants && is_constant(&r)) || (self.cfg.inline_variables && r.as_var().is_some()) {
            self.stats.lets_inlined += 1;
            return Sem::Base(r);
        }
        if self.cfg.name_cons_cells {
            if let Some(spine) = self.name_cells(v, &r, out) {
                self.stats.lets_inlined += 1;
                return Sem::Base(spine);
            }
        }
        let fresh = v.refresh();
        out.push((fresh.clone(), r));
        self.stats.lets_lifted += 1;
        Sem::Base(Expr::var(&fresh))
    }

    /// For a list literal, binds every element that is neither a variable
    /// nor a constant and returns the spine over the new names.
    fn name_cells(&mut self, v: &Var, r: &Expr, out: &mut Telescope) -> Option<Expr> {
        let mut cells = Vec::new();
        let mut cur = r.clone();
        while let Some((h, t)) = cons_parts(&cur) {
            let head = match cur.kind() {
                ExprKind::App(f, _) => match f.kind() {
                    ExprKind::App(c, _) => c.clone(),
                    _ => unreachable!("cons_parts matched"),
                },
                _ => unreachable!("cons_parts matched"),
            };
            cells.push((head, h));
            cur = t;
        }
        if cells.is_empty() {
            return None;
        }
        let mut named = Vec::with_capacity(cells.len());
        for (head, h) in cells {
            let h = if h.as_var().is_some() || is_constant(&h) {
                h
            } else {
                let fresh = v.refresh();
                out.push((fresh.clone(), h));
                self.stats.lets_lifted += 1;
                Expr::var(&fresh)
            };
            named.push((head, h));
        }
        Some(named.into_iter().rev().fold(cur, |tail, (head, h)| Expr::apps(head, [h, tail])))
    }

    pub fn apply(&mut self, f: &Sem, a: Sem, out: &mut Telescope) -> Result<Sem, EngineError> {
        match f {
            Sem::Fun(_, g) => {
                let g = g.clone();
                stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || g(self, a, out))
            }
            Sem::Base(e) => Err(EngineError::Internal(format!("cannot apply base value {e}"))),
        }
    }

    /// Reads a semantic value back as syntax, eta-expanding at arrows.
    pub fn reify(&mut self, s: &Sem, t: &ObjType) -> Result<Expr, EngineError> {
        stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || match (s, t) {
            (Sem::Base(e), _) => Ok(e.clone()),
            (Sem::Fun(hint, g), ObjType::Arrow(dom, cod)) => {
                let x = Var::fresh(hint.clone());
                if matches!(**dom, ObjType::Arrow(..)) {
                    self.types.insert(x.id, (**dom).clone());
                }
                let mut scratch = Vec::new();
                let xs = self.reflect(Expr::var(&x), dom, &mut scratch)?;
                let mut body_lets = Vec::new();
                let r = g.clone()(self, xs, &mut body_lets)?;
                let body = self.reify(&r, cod)?;
                Ok(Expr::abs(x, (**dom).clone(), wrap_lets(body_lets, body)))
            }
            (Sem::Fun(..), ObjType::Base(_)) => {
                Err(EngineError::Internal(format!("function value at base type {t}")))
            }
        })
    }

    /// Turns a neutral term into a semantic value: closures that rebuild the
    /// application at arrow types, the head rewriter at base types.
    pub fn reflect(&mut self, e: Expr, t: &ObjType, out: &mut Telescope) -> Result<Sem, EngineError> {
        match t {
            ObjType::Arrow(dom, cod) => {
                let (dom, cod) = (dom.clone(), cod.clone());
                Ok(Sem::fun("x", move |en, a, out| {
                    let ae = en.reify(&a, &dom)?;
                    en.reflect(Expr::app(e.clone(), ae), &cod, out)
                }))
            }
            ObjType::Base(_) => {
                if head_is_var(&e) {
                    return Ok(Sem::Base(e));
                }
                Ok(self.rewrite_head(&e, out)?.unwrap_or(Sem::Base(e)))
            }
        }
    }

    fn reflect_ident(&mut self, i: &Ident, out: &mut Telescope) -> Result<Sem, EngineError> {
        match i {
            Ident::ListRect(..) | Ident::NatRect(_) => Ok(eliminator(i.clone())),
            _ => self.reflect(Expr::ident(i.clone()), &i.ty(), out),
        }
    }

    fn list_rect(&mut self, i: &Ident, nil: Sem, cons: Sem, l: Sem, out: &mut Telescope) -> Result<Sem, EngineError> {
        let Ident::ListRect(_, motive) = i else {
            return Err(EngineError::Internal("list_rect expected".into()));
        };
        let mut cells = Vec::new();
        let mut cur = l.expect_base()?.clone();
        while let Some((h, t)) = cons_parts(&cur) {
            cells.push((h, t.clone()));
            cur = t;
        }
        let mut acc = if matches!(cur.as_ident(), Some(Ident::Nil(_))) {
            nil
        } else {
            let step_ty = arg_type(&i.ty(), 1)?;
            let args = [self.reify(&nil, motive)?, self.reify(&cons, &step_ty)?, cur];
            self.reflect(Expr::apps(Expr::ident(i.clone()), args), motive, out)?
        };
        for (h, t) in cells.into_iter().rev() {
            self.stats.eliminator_steps += 1;
            let f = self.apply(&cons, Sem::Base(h), out)?;
            let f = self.apply(&f, Sem::Base(t), out)?;
            acc = self.apply(&f, acc, out)?;
        }
        Ok(acc)
    }

    fn nat_rect(&mut self, i: &Ident, zero: Sem, succ: Sem, n: Sem, out: &mut Telescope) -> Result<Sem, EngineError> {
        let Ident::NatRect(motive) = i else {
            return Err(EngineError::Internal("nat_rect expected".into()));
        };
        let ne = n.expect_base()?.clone();
        match ne.as_int() {
            Some(k) if k <= NAT_UNFOLD_LIMIT => {
                let mut acc = zero;
                for j in 0..k.max(0) {
                    self.stats.eliminator_steps += 1;
                    let f = self.apply(&succ, Sem::Base(Expr::int(j)), out)?;
                    acc = self.apply(&f, acc, out)?;
                }
                Ok(acc)
            }
            _ => {
                let step_ty = arg_type(&i.ty(), 1)?;
                let args = [self.reify(&zero, motive)?, self.reify(&succ, &step_ty)?, ne];
                self.reflect(Expr::apps(Expr::ident(i.clone()), args), motive, out)
            }
        }
    }

    /// Tries the rule set at the root of `e`. On success the instantiated
    /// right-hand side is reduced, which may fire further rules.
    pub fn rewrite_head(&mut self, e: &Expr, out: &mut Telescope) -> Result<Option<Sem>, EngineError> {
        if self.cfg.collect_stats {
            self.stats.heads.push(e.clone());
        }
        let rules: &'r RuleSet = self.rules;
        let Some(compiled) = &rules.compiled else { return Ok(None) };
        let found = eval_decision_tree(compiled, e, |idx, binds| {
            let lookup = |v: &Var| -> Result<CondValue, CondError> {
                let b = binds.get(&v.id).ok_or_else(|| CondError::UnboundVariable(v.name.to_string()))?;
                cond_value_of(&v.name, b)
            };
            Ok(rules.rules[idx].fire_check(&lookup)?.map(|consts| (idx, binds.clone(), consts)))
        })?;
        let Some((idx, binds, consts)) = found else { return Ok(None) };
        let rule = &rules.rules[idx];
        self.applied += 1;
        if self.applied > self.cfg.budget {
            return Err(EngineError::BudgetExhausted(self.cfg.budget));
        }
        if self.depth >= self.cfg.fuel {
            return Err(EngineError::FuelExhausted { rule: rule.name.clone(), depth: self.depth });
        }
        *self.stats.rule_applications.entry(rule.name.clone()).or_default() += 1;
        let mut env = SemEnv::new();
        for pv in &rule.vars {
            let b = binds
                .get(&pv.var.id)
                .ok_or_else(|| EngineError::Internal(format!("rule `{}` left `{}` unbound", rule.name, pv.var.name)))?;
            let s = match pv.ty {
                ObjType::Base(_) => Sem::Base(b.clone()),
                ObjType::Arrow(..) => self.reduce(b, &SemEnv::new(), out)?,
            };
            env.insert(pv.var.id, s);
        }
        for (id, n) in consts {
            env.insert(id, Sem::Base(Expr::int(n)));
        }
        self.depth += 1;
        let r = self.reduce(&rule.rhs, &env, out);
        self.depth -= 1;
        r.map(Some)
    }
}

type Fn3 = dyn Fn(&mut Engine<'_>, Sem, Sem, Sem, &mut Telescope) -> Result<Sem, EngineError>;

fn curry3(hints: [&'static str; 3], f: Rc<Fn3>) -> Sem {
    Sem::fun(hints[0], move |_, a, _| {
        let f = f.clone();
        Ok(Sem::fun(hints[1], move |_, b, _| {
            let (f, a) = (f.clone(), a.clone());
            Ok(Sem::fun(hints[2], move |en, c, out| f(en, a.clone(), b.clone(), c, out)))
        }))
    })
}

/// Eliminators compute on constructor-headed scrutinees and stay residual
/// otherwise.
fn eliminator(i: Ident) -> Sem {
    match i {
        Ident::ListRect(..) => curry3(
            ["p", "step", "l"],
            Rc::new(move |en, nil, cons, l, out| en.list_rect(&i, nil, cons, l, out)),
        ),
        _ => curry3(
            ["p", "step", "n"],
            Rc::new(move |en, zero, succ, n, out| en.nat_rect(&i, zero, succ, n, out)),
        ),
    }
}

/// Normalizes `e`, rewriting with `rules` wherever a base-typed
/// identifier application is formed. `free_types` gives the types of free
/// variables, which stay opaque.
pub fn rewrite_top(
    e: &Expr,
    free_types: &TypeEnv,
    rules: &RuleSet,
    cfg: &EngineConfig,
) -> Result<(Expr, RewriteStats), EngineError> {
    let ty = type_check(e, free_types)?;
    let mut en = Engine::new(rules, cfg.clone(), free_types);
    let mut out = Vec::new();
    let s = en.reduce(e, &SemEnv::new(), &mut out)?;
    let body = en.reify(&s, &ty)?;
    let mut r = wrap_lets(out, body);
    if !has_unique_binders(&r) {
        r = refresh_binders(&r);
    }
    Ok((r, en.stats))
}

/// One head-rewriting attempt on a base-typed term. `None` when no rule
/// fires at the root.
pub fn rewrite_head(
    e: &Expr,
    free_types: &TypeEnv,
    rules: &RuleSet,
    cfg: &EngineConfig,
    stats: &mut RewriteStats,
) -> Result<Option<Expr>, EngineError> {
    let mut en = Engine::new(rules, cfg.clone(), free_types);
    let mut out = Vec::new();
    let r = en.rewrite_head(e, &mut out)?;
    let r = match r {
        Some(s) => Some(wrap_lets(out, s.expect_base()?.clone())),
        None => None,
    };
    stats.absorb(en.stats);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denote::denote;
    use crate::expr::{alpha_eq, term_stats};
    use crate::syntax::{parse_rule_file, parse_term_in, print_expr, Scope};

    const ADD_ZERO: &str = "rule add_zero : forall (n : int), n + 0 => n";
    const SHIFT: &str =
        "rule div_pow2 : forall (n : int) ('m : int), when 2 ^ log2floor m == m, n / m => n >> '(log2floor m)";

    fn rules(src: &str) -> RuleSet {
        parse_rule_file(src).unwrap().into_rule_set().unwrap()
    }

    fn run_with(rs: &RuleSet, term: &str, cfg: &EngineConfig) -> (Expr, Expr, TypeEnv, RewriteStats) {
        let scope = rs.symbols.iter().fold(Scope::new(), |s, sym| s.with_symbol(sym.clone()));
        let el = parse_term_in(term, &scope).unwrap();
        let env: TypeEnv = el.free.iter().map(|(v, t)| (v.id, t.clone())).collect();
        let (out, stats) = rewrite_top(&el.expr, &env, rs, cfg).unwrap();
        (el.expr, out, env, stats)
    }

    fn run(rs: &RuleSet, term: &str) -> (String, RewriteStats) {
        let (_, out, _, stats) = run_with(rs, term, &EngineConfig::default());
        (print_expr(&out), stats)
    }

    #[test]
    fn eta_expanded_addition_collapses() {
        let (out, stats) = run(&rules(ADD_ZERO), "(\\(f : int -> int -> int) (x : int) (y : int). f x y) (+) z 0");
        assert_eq!(out, "z");
        assert_eq!(stats.rule_applications["add_zero"], 1);
    }

    #[test]
    fn map_over_let_bound_list() {
        let rs = rules(
            "symbol map : (int -> int) -> list int -> list int
             rule map_nil : forall (f : int -> int), map f [] => []
             rule map_cons : forall (f : int -> int) (x : int) (xs : list int), map f (x :: xs) => f x :: map f xs
             rule add_zero : forall (n : int), n + 0 => n",
        );
        let (out, _) = run(&rs, "map (\\x. y + x) (let z = a * b in [0; 1; z + 1])");
        assert_eq!(out, "let z = a * b in [y; y + 1; y + (z + 1)]");
    }

    #[test]
    fn shift_rule_fires_only_on_powers_of_two() {
        let rs = rules(SHIFT);
        assert_eq!(run(&rs, "10 / 4").0, "10 >> 2");
        assert_eq!(run(&rs, "10 / 3").0, "10 / 3");
        assert_eq!(run(&rs, "y / 8").0, "y >> 3");
    }

    #[test]
    fn list_rect_on_nil_is_the_nil_case() {
        let (out, stats) = run(&RuleSet::empty(), "list_rect (a + 1) (\\h t r. h + r) []");
        assert_eq!(out, "a + 1");
        assert_eq!(stats.eliminator_steps, 0);
        let (out, _) = run(&RuleSet::empty(), "list_rect 0 (\\h t r. h + r) [a; b]");
        assert_eq!(out, "a + (b + 0)");
    }

    #[test]
    fn list_rect_on_open_tail_stays_residual() {
        let (out, _) = run(&RuleSet::empty(), "list_rect 0 (\\h t r. h + r) (a :: l)");
        assert!(out.starts_with("a + list_rect 0 (\\h"), "{out}");
    }

    #[test]
    fn nat_rect_unfolds_literals() {
        let (out, stats) = run(&RuleSet::empty(), "nat_rect a (\\k acc. acc * 2) 3");
        assert_eq!(out, "a * 2 * 2 * 2");
        assert_eq!(stats.eliminator_steps, 3);
    }

    #[test]
    fn free_functions_are_eta_expanded() {
        let (out, stats) = {
            let cfg = EngineConfig { collect_stats: true, ..EngineConfig::default() };
            let (_, out, _, stats) = run_with(&rules(ADD_ZERO), "(f : int -> int)", &cfg);
            (print_expr(&out), stats)
        };
        assert_eq!(out, "\\x : int. f x");
        assert_eq!(stats.heads.len(), 0, "applications headed by a variable are not rewritten");
    }

    #[test]
    fn telescope_is_flushed_around_the_payload() {
        let (out, _) = run(&RuleSet::empty(), "let y = a * b in y + y");
        assert_eq!(out, "let y = a * b in y + y");
        let (out, stats) = run(&RuleSet::empty(), "f (let y = a * b in y)");
        assert_eq!(out, "let y = a * b in f y");
        assert_eq!(stats.lets_lifted, 1);
    }

    #[test]
    fn constants_and_variables_are_inlined() {
        let (out, stats) = run(&RuleSet::empty(), "let a = 3 in let b = x in a + b");
        assert_eq!(out, "3 + x");
        assert_eq!(stats.lets_inlined, 2);
    }

    #[test]
    fn sharing_is_kept_without_inlining() {
        let cfg = EngineConfig { inline_constants: false, inline_variables: false, ..EngineConfig::default() };
        let (_, out, _, _) =
            run_with(&rules(ADD_ZERO), "let v1 = x + 0 in let v2 = v1 + 0 in let v3 = v2 + 0 in v3", &cfg);
        assert_eq!(term_stats(&out).let_count, 3);
    }

    #[test]
    fn heads_are_rewritten_after_their_arguments() {
        let cfg = EngineConfig { collect_stats: true, ..EngineConfig::default() };
        let (_, _, _, stats) = run_with(&rules(ADD_ZERO), "(a + 0) + (b + 0)", &cfg);
        let heads: Vec<String> = stats.heads.iter().map(print_expr).collect();
        assert_eq!(heads, ["0", "a + 0", "0", "b + 0", "a + b"]);
    }

    #[test]
    fn looping_rules_run_out_of_fuel() {
        let rs = rules("rule comm : forall (a : int) (b : int), a + b => b + a");
        let el = parse_term_in("x + y", &Scope::new()).unwrap();
        let env: TypeEnv = el.free.iter().map(|(v, t)| (v.id, t.clone())).collect();
        let cfg = EngineConfig { fuel: 50, ..EngineConfig::default() };
        let err = rewrite_top(&el.expr, &env, &rs, &cfg).unwrap_err();
        assert!(matches!(err, EngineError::FuelExhausted { depth: 50, .. }), "{err}");
        let cfg = EngineConfig { budget: 10, ..EngineConfig::default() };
        let err = rewrite_top(&el.expr, &env, &rs, &cfg).unwrap_err();
        assert!(matches!(err, EngineError::BudgetExhausted(10)), "{err}");
    }

    #[test]
    fn head_rewrite_alone() {
        let rs = rules(ADD_ZERO);
        let el = parse_term_in("(x * 2) + 0", &Scope::new()).unwrap();
        let env: TypeEnv = el.free.iter().map(|(v, t)| (v.id, t.clone())).collect();
        let mut stats = RewriteStats::default();
        let r = rewrite_head(&el.expr, &env, &rs, &EngineConfig::default(), &mut stats).unwrap().unwrap();
        assert_eq!(print_expr(&r), "x * 2");
        let el = parse_term_in("x * 2", &Scope::new()).unwrap();
        assert!(rewrite_head(&el.expr, &env, &rs, &EngineConfig::default(), &mut stats).unwrap().is_none());
    }

    #[test]
    fn output_is_denotationally_equal_and_hygienic() {
        let rs = rules(ADD_ZERO);
        let (input, out, env, _) =
            run_with(&rs, "(\\g : int -> int. g (g 1)) (\\u. let w = u * u in w + 0 + w)", &EngineConfig::default());
        assert!(env.is_empty());
        let e = HashMap::new();
        assert_eq!(denote(&input, &e).unwrap(), denote(&out, &e).unwrap());
        assert!(has_unique_binders(&out));
        assert!(alpha_eq(&out, &out));
    }
}
