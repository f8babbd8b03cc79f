//! Naive one-step-at-a-time rewriting. Every step re-traverses the whole
//! term, substitution copies terms textually, and every step is recorded
//! with the size of the goal it was taken in.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::expr::{node_size, substitute, Expr, ExprKind, VarId};
use crate::ident::Ident;
use crate::pattern::{is_constant, match_pattern, RewriteRule, RuleSet};
use crate::side_cond::{lookup_in, CondError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    Topdown,
    Bottomup,
}

impl std::str::FromStr for Order {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "topdown" | "top-down" => Ok(Order::Topdown),
            "bottomup" | "bottom-up" => Ok(Order::Bottomup),
            _ => Err(format!("unknown order `{s}`")),
        }
    }
}

pub const BETA: &str = "beta";
pub const LIST_RECT_NIL: &str = "list_rect_nil";
pub const LIST_RECT_CONS: &str = "list_rect_cons";
pub const NAT_RECT_ZERO: &str = "nat_rect_zero";
pub const NAT_RECT_SUCC: &str = "nat_rect_succ";
pub const LET_INLINE: &str = "let_inline";
/// `list_rect n c (let z = e in b)  ~>  let z = e in list_rect n c b`
pub const LIFT_LIST_RECT: &str = "lift_list_rect";
/// `(let z = e in f) a  ~>  let z = e in f a`
pub const LIFT_APP_FN: &str = "lift_app_fn";

/// Structural rules the rule language cannot state, because their
/// left-hand sides bind variables. Each group can be switched off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Builtins {
    pub beta: bool,
    pub eliminators: bool,
    /// Inline lets whose right-hand side is a variable or a constant.
    pub inline_lets: bool,
    pub lift_lets: bool,
}

impl Builtins {
    pub const NONE: Builtins = Builtins { beta: false, eliminators: false, inline_lets: false, lift_lets: false };
    pub const ALL: Builtins = Builtins { beta: true, eliminators: true, inline_lets: true, lift_lets: true };

    fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.lift_lets {
            v.push(LIFT_APP_FN);
        }
        if self.beta {
            v.push(BETA);
        }
        if self.lift_lets {
            v.push(LIFT_LIST_RECT);
        }
        if self.eliminators {
            v.extend([LIST_RECT_NIL, LIST_RECT_CONS, NAT_RECT_ZERO, NAT_RECT_SUCC]);
        }
        if self.inline_lets {
            v.push(LET_INLINE);
        }
        v
    }
}

impl Default for Builtins {
    fn default() -> Self {
        Builtins::ALL
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: String,
    /// Child indices from the root: application 0 = function, 1 = argument;
    /// lambda 0 = body; let 0 = bound term, 1 = body.
    pub path: Vec<u8>,
    pub before_size: usize,
    pub after_size: usize,
    pub goal_size: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraceCost {
    pub steps: usize,
    pub total_goal_size: u64,
}

pub fn trace_cost(trace: &[TraceStep]) -> TraceCost {
    TraceCost { steps: trace.len(), total_goal_size: trace.iter().map(|s| s.goal_size as u64).sum() }
}

/// Steps per rule name.
pub fn rule_counts(trace: &[TraceStep]) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    for s in trace {
        *m.entry(s.rule.clone()).or_insert(0) += 1;
    }
    m
}

/// Steps taken by the let-lifting rules.
pub fn lift_steps(trace: &[TraceStep]) -> u64 {
    trace.iter().filter(|s| s.rule == LIFT_LIST_RECT || s.rule == LIFT_APP_FN).count() as u64
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("step budget of {limit} exhausted")]
    StepBudgetExhausted { limit: usize, partial: Box<(Expr, Vec<TraceStep>)> },
    #[error(transparent)]
    Condition(#[from] CondError),
    #[error("replay failed at step {index}: {message}")]
    Replay { index: usize, message: String },
}

pub struct Baseline<'r> {
    pub rules: &'r RuleSet,
    pub builtins: Builtins,
    pub order: Order,
}

impl<'r> Baseline<'r> {
    pub fn new(rules: &'r RuleSet, builtins: Builtins, order: Order) -> Self {
        Baseline { rules, builtins, order }
    }

    /// The first step in traversal order, if any.
    pub fn rewrite_once(&self, e: &Expr) -> Result<Option<(Expr, TraceStep)>, BaselineError> {
        let mut path = Vec::new();
        let Some((out, rule, before, after)) = self.find(e, &mut path)? else {
            return Ok(None);
        };
        let step = TraceStep { rule, path, before_size: before, after_size: after, goal_size: node_size(e) };
        Ok(Some((out, step)))
    }

    pub fn rewrite_exhaustive(&self, e: &Expr, max_steps: usize) -> Result<(Expr, Vec<TraceStep>), BaselineError> {
        let mut cur = e.clone();
        let mut trace = Vec::new();
        loop {
            match self.rewrite_once(&cur)? {
                None => return Ok((cur, trace)),
                Some(_) if trace.len() >= max_steps => {
                    return Err(BaselineError::StepBudgetExhausted {
                        limit: max_steps,
                        partial: Box::new((cur, trace)),
                    })
                }
                Some((next, step)) => {
                    cur = next;
                    trace.push(step);
                }
            }
        }
    }

    /// Re-applies each recorded step at its recorded path.
    pub fn replay(&self, e: &Expr, trace: &[TraceStep]) -> Result<Expr, BaselineError> {
        let mut cur = e.clone();
        for (index, step) in trace.iter().enumerate() {
            cur = replace_at(&cur, &step.path, &mut |node| {
                self.apply_named(&step.rule, node)?
                    .ok_or_else(|| BaselineError::Replay { index, message: format!("`{}` does not apply", step.rule) })
            })
            .map_err(|e| match e {
                ReplaceError::BadPath => BaselineError::Replay { index, message: "path leaves the term".into() },
                ReplaceError::Inner(e) => e,
            })?;
        }
        Ok(cur)
    }

    #[allow(clippy::type_complexity)]
    fn find(&self, e: &Expr, path: &mut Vec<u8>) -> Result<Option<(Expr, String, usize, usize)>, BaselineError> {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || {
            if self.order == Order::Topdown {
                if let Some((out, rule)) = self.step_here(e)? {
                    let sizes = (node_size(e), node_size(&out));
                    return Ok(Some((out, rule, sizes.0, sizes.1)));
                }
            }
            let kids: Vec<&Expr> = match e.kind() {
                ExprKind::Var(_) | ExprKind::Ident(_) => vec![],
                ExprKind::App(f, a) => vec![f, a],
                ExprKind::Abs(_, _, b) => vec![b],
                ExprKind::LetIn(_, r, b) => vec![r, b],
            };
            for (i, k) in kids.into_iter().enumerate() {
                path.push(i as u8);
                if let Some((sub, rule, b, a)) = self.find(k, path)? {
                    return Ok(Some((with_child(e, i, sub), rule, b, a)));
                }
                path.pop();
            }
            if self.order == Order::Bottomup {
                if let Some((out, rule)) = self.step_here(e)? {
                    let sizes = (node_size(e), node_size(&out));
                    return Ok(Some((out, rule, sizes.0, sizes.1)));
                }
            }
            Ok(None)
        })
    }

    /// User rules in priority order, then the built-ins.
    fn step_here(&self, e: &Expr) -> Result<Option<(Expr, String)>, BaselineError> {
        for r in &self.rules.rules {
            if let Some(out) = apply_rule(r, e)? {
                return Ok(Some((out, r.name.clone())));
            }
        }
        for name in self.builtins.names() {
            if let Some(out) = builtin(name, e) {
                return Ok(Some((out, name.to_string())));
            }
        }
        Ok(None)
    }

    fn apply_named(&self, name: &str, e: &Expr) -> Result<Option<Expr>, BaselineError> {
        if let Some(r) = self.rules.rules.iter().find(|r| r.name == name) {
            return apply_rule(r, e);
        }
        if self.builtins.names().contains(&name) {
            return Ok(builtin(name, e));
        }
        Ok(None)
    }
}

fn apply_rule(r: &RewriteRule, e: &Expr) -> Result<Option<Expr>, BaselineError> {
    let Some(mut b) = match_pattern(&r.lhs, e) else {
        return Ok(None);
    };
    let Some(computed) = r.fire_check(&lookup_in(&b))? else {
        return Ok(None);
    };
    for (v, n) in computed {
        b.insert(v, Expr::int(n));
    }
    Ok(Some(substitute(&r.rhs, &b)))
}

fn subst1(body: &Expr, v: VarId, with: &Expr) -> Expr {
    substitute(body, &HashMap::from([(v, with.clone())]))
}

fn builtin(name: &str, e: &Expr) -> Option<Expr> {
    match name {
        BETA => match e.kind() {
            ExprKind::App(f, a) => match f.kind() {
                ExprKind::Abs(v, _, b) => Some(subst1(b, v.id, a)),
                _ => None,
            },
            _ => None,
        },
        LIFT_APP_FN => match e.kind() {
            ExprKind::App(f, a) => match f.kind() {
                ExprKind::LetIn(v, r, b) => Some(Expr::let_in(v.clone(), r.clone(), Expr::app(b.clone(), a.clone()))),
                _ => None,
            },
            _ => None,
        },
        LET_INLINE => match e.kind() {
            ExprKind::LetIn(v, r, b) if r.as_var().is_some() || is_constant(r) => Some(subst1(b, v.id, r)),
            _ => None,
        },
        _ => {
            let (head, args) = e.spine();
            let [x, y, scrut] = args.as_slice() else {
                return None;
            };
            match (name, head.as_ident()?) {
                (LIFT_LIST_RECT, Ident::ListRect(..)) => match scrut.kind() {
                    ExprKind::LetIn(v, r, b) => Some(Expr::let_in(
                        v.clone(),
                        r.clone(),
                        Expr::apps(head.clone(), [(*x).clone(), (*y).clone(), b.clone()]),
                    )),
                    _ => None,
                },
                (LIST_RECT_NIL, Ident::ListRect(..)) => match scrut.as_ident() {
                    Some(Ident::Nil(_)) => Some((*x).clone()),
                    _ => None,
                },
                (LIST_RECT_CONS, Ident::ListRect(..)) => {
                    let (ch, cargs) = scrut.spine();
                    match (ch.as_ident(), cargs.as_slice()) {
                        (Some(Ident::Cons(_)), [h, t]) => {
                            let rec = Expr::apps(head.clone(), [(*x).clone(), (*y).clone(), (*t).clone()]);
                            Some(Expr::apps((*y).clone(), [(*h).clone(), (*t).clone(), rec]))
                        }
                        _ => None,
                    }
                }
                (NAT_RECT_ZERO, Ident::NatRect(_)) => (scrut.as_int() == Some(0)).then(|| (*x).clone()),
                (NAT_RECT_SUCC, Ident::NatRect(_)) => match scrut.as_int() {
                    Some(k) if k > 0 => {
                        let rec = Expr::apps(head.clone(), [(*x).clone(), (*y).clone(), Expr::int(k - 1)]);
                        Some(Expr::apps((*y).clone(), [Expr::int(k - 1), rec]))
                    }
                    _ => None,
                },
                _ => None,
            }
        }
    }
}

fn with_child(e: &Expr, i: usize, c: Expr) -> Expr {
    match (e.kind(), i) {
        (ExprKind::App(_, a), 0) => Expr::app(c, a.clone()),
        (ExprKind::App(f, _), 1) => Expr::app(f.clone(), c),
        (ExprKind::Abs(v, t, _), 0) => Expr::abs(v.clone(), t.clone(), c),
        (ExprKind::LetIn(v, _, b), 0) => Expr::let_in(v.clone(), c, b.clone()),
        (ExprKind::LetIn(v, r, _), 1) => Expr::let_in(v.clone(), r.clone(), c),
        _ => unreachable!("child index out of range"),
    }
}

enum ReplaceError {
    BadPath,
    Inner(BaselineError),
}

fn replace_at(
    e: &Expr,
    path: &[u8],
    f: &mut dyn FnMut(&Expr) -> Result<Expr, BaselineError>,
) -> Result<Expr, ReplaceError> {
    let mut spine = vec![e.clone()];
    for &i in path {
        let cur = spine.last().unwrap();
        let next = match (cur.kind(), i) {
            (ExprKind::App(f, _), 0) | (ExprKind::Abs(_, _, f), 0) | (ExprKind::LetIn(_, f, _), 0) => f.clone(),
            (ExprKind::App(_, a), 1) | (ExprKind::LetIn(_, _, a), 1) => a.clone(),
            _ => return Err(ReplaceError::BadPath),
        };
        spine.push(next);
    }
    let mut out = f(spine.last().unwrap()).map_err(ReplaceError::Inner)?;
    for (parent, &i) in spine.iter().rev().skip(1).zip(path.iter().rev()) {
        out = with_child(parent, i as usize, out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::alpha_eq;
    use crate::stdlib;
    use crate::syntax::{parse_term, print_expr};

    fn run(src: &str, rules: &RuleSet, order: Order) -> (Expr, Vec<TraceStep>) {
        let e = parse_term(src).unwrap();
        Baseline::new(rules, Builtins::ALL, order).rewrite_exhaustive(&e, 100_000).unwrap()
    }

    #[test]
    fn topdown_takes_leftmost_outermost_first() {
        let rules = stdlib::load(stdlib::ADD_ZERO);
        let e = parse_term("(x + 0) + (y + 0)").unwrap();
        let b = Baseline::new(&rules, Builtins::NONE, Order::Topdown);
        let (out, step) = b.rewrite_once(&e).unwrap().unwrap();
        assert_eq!(print_expr(&out), "x + (y + 0)");
        assert_eq!(step.path, vec![0, 1]);
        assert_eq!((step.before_size, step.after_size, step.goal_size), (5, 1, 13));
        assert!(b.rewrite_once(&parse_term("x").unwrap()).unwrap().is_none());
    }

    #[test]
    fn bottomup_goes_inside_first() {
        let rules = stdlib::load(stdlib::ADD_ZERO);
        let e = parse_term("(x + 0) + 0").unwrap();
        let (out, step) = Baseline::new(&rules, Builtins::NONE, Order::Bottomup).rewrite_once(&e).unwrap().unwrap();
        assert_eq!(print_expr(&out), "x + 0");
        assert_eq!(step.path, vec![0, 1]);
        let (out, step) = Baseline::new(&rules, Builtins::NONE, Order::Topdown).rewrite_once(&e).unwrap().unwrap();
        assert_eq!(print_expr(&out), "x + 0");
        assert!(step.path.is_empty());
    }

    #[test]
    fn underlets_counts_by_hand() {
        let rules = stdlib::load(stdlib::ADD_ZERO);
        for order in [Order::Topdown, Order::Bottomup] {
            let (out, trace) = run("let a = x + 0 in let b = a + 0 in let c = b + 0 in c", &rules, order);
            assert_eq!(print_expr(&out), "x");
            let c = rule_counts(&trace);
            assert_eq!(c["add_zero"], 3);
            assert_eq!(c[LET_INLINE], 3);
            assert_eq!(trace.len(), 6);
        }
    }

    #[test]
    fn normal_term_takes_no_steps() {
        let (_, trace) = run("x + y", &stdlib::standard(), Order::Topdown);
        assert!(trace.is_empty());
        assert_eq!(trace_cost(&trace), TraceCost { steps: 0, total_goal_size: 0 });
    }

    #[test]
    fn eliminators_and_side_conditions() {
        let rules = stdlib::standard();
        let (out, _) = run("list_rect 0 (\\h t r. h + r) [1; 2; 3]", &rules, Order::Topdown);
        assert_eq!(print_expr(&out), "6");
        let (out, _) = run("nat_rect 1 (\\k acc. acc * 2) 4", &rules, Order::Bottomup);
        assert_eq!(print_expr(&out), "16");
        let (out, _) = run("y / 8", &rules, Order::Topdown);
        assert_eq!(print_expr(&out), "y >> 3");
        let (out, _) = run("y / 6", &rules, Order::Topdown);
        assert_eq!(print_expr(&out), "y / 6");
    }

    // Counts from an independent model of the same step relation.
    #[test]
    fn copy_goal_step_counts() {
        let src = |n: usize, m: usize| {
            let l = vec!["v"; n].join("; ");
            format!(
                "list_rect [] (\\h t r. h :: r) (nat_rect [{l}] (\\k acc. (\\l. list_rect [] (\\h t r. let y = h + h in y :: r) l) acc) {m})"
            )
        };
        let rules = RuleSet::empty();
        let cases = [
            (Order::Topdown, 1, 1, [6, 9, 1]),
            (Order::Topdown, 1, 2, [9, 15, 3]),
            (Order::Topdown, 2, 2, [12, 24, 6]),
            (Order::Bottomup, 1, 2, [9, 14, 3]),
            (Order::Bottomup, 2, 2, [12, 23, 6]),
        ];
        for (order, n, m, [elim, beta, lift]) in cases {
            let (_, trace) = run(&src(n, m), &rules, order);
            let c = rule_counts(&trace);
            let elims: u64 = [LIST_RECT_NIL, LIST_RECT_CONS, NAT_RECT_ZERO, NAT_RECT_SUCC]
                .iter()
                .map(|k| c.get(*k).copied().unwrap_or(0))
                .sum();
            assert_eq!((elims, c[BETA], lift_steps(&trace)), (elim, beta, lift), "{order:?} {n} {m}");
        }
    }

    #[test]
    fn replay_reproduces_output() {
        let rules = stdlib::standard();
        let srcs = [
            "let z = a + 0 in list_rect 0 (\\h t r. h * 1 + r) [z; z; 2 + 3]",
            "(\\f. f (f b)) (\\q. let w = q * 1 in w + 0)",
        ];
        for e in srcs.map(|s| parse_term(s).unwrap()) {
            for order in [Order::Topdown, Order::Bottomup] {
                let b = Baseline::new(&rules, Builtins::ALL, order);
                let (out, trace) = b.rewrite_exhaustive(&e, 10_000).unwrap();
                assert!(alpha_eq(&b.replay(&e, &trace).unwrap(), &out));
            }
        }
    }

    #[test]
    fn step_budget_keeps_partial_trace() {
        let e = parse_term("nat_rect 0 (\\k acc. acc + 1) 50").unwrap();
        let rules = stdlib::standard();
        let err = Baseline::new(&rules, Builtins::ALL, Order::Topdown).rewrite_exhaustive(&e, 10).unwrap_err();
        match err {
            BaselineError::StepBudgetExhausted { limit, partial } => {
                assert_eq!(limit, 10);
                assert_eq!(partial.1.len(), 10);
            }
            other => panic!("{other}"),
        }
    }
}
