//! Rewrite rules, root matching, and compilation of rule left-hand sides to
//! decision trees.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Expr, ExprKind, Var, VarId};
use crate::ident::{Ident, Symbol};
use crate::side_cond::{eval_cond, CondError, CondExpr, CondValue};
use crate::types::ObjType;

/// A declared rule variable. Constant variables only match compile-time
/// constants.
#[derive(Clone, Debug)]
pub struct PatVar {
    pub var: Var,
    pub ty: ObjType,
    pub constant: bool,
}

#[derive(Clone, Debug)]
pub enum Pattern {
    Wildcard(Var),
    ConstWildcard(Var),
    Ident(Ident),
    App(Box<Pattern>, Box<Pattern>),
}

impl Pattern {
    pub fn app(f: Pattern, a: Pattern) -> Self {
        Pattern::App(Box::new(f), Box::new(a))
    }

    pub fn is_wildcard(&self) -> bool {
        matches!(self, Pattern::Wildcard(_) | Pattern::ConstWildcard(_))
    }

    /// Pattern variables in left-to-right order, repeats included.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            match p {
                Pattern::Wildcard(v) | Pattern::ConstWildcard(v) => out.push(v.clone()),
                Pattern::Ident(_) => {}
                Pattern::App(f, a) => {
                    stack.push(a);
                    stack.push(f);
                }
            }
        }
        out
    }

    /// The pattern read as a term whose free variables are the pattern
    /// variables.
    pub fn to_expr(&self) -> Expr {
        match self {
            Pattern::Wildcard(v) | Pattern::ConstWildcard(v) => Expr::var(v),
            Pattern::Ident(i) => Expr::ident(i.clone()),
            Pattern::App(f, a) => Expr::app(f.to_expr(), a.to_expr()),
        }
    }

    /// Structural equality after mapping variables through `rename`.
    pub fn equiv(&self, other: &Pattern, rename: &HashMap<VarId, VarId>) -> bool {
        let same = |a: &Var, b: &Var| rename.get(&a.id).copied().unwrap_or(a.id) == b.id;
        match (self, other) {
            (Pattern::Wildcard(a), Pattern::Wildcard(b)) => same(a, b),
            (Pattern::ConstWildcard(a), Pattern::ConstWildcard(b)) => same(a, b),
            (Pattern::Ident(a), Pattern::Ident(b)) => a == b,
            (Pattern::App(f1, a1), Pattern::App(f2, a2)) => f1.equiv(f2, rename) && a1.equiv(a2, rename),
            _ => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub name: String,
    pub vars: Vec<PatVar>,
    pub lhs: Pattern,
    /// Right-hand template; its free variables are rule variables and
    /// computed constants.
    pub rhs: Expr,
    /// Constants computed from the bindings when the rule fires.
    pub computed: Vec<(Var, CondExpr)>,
    pub side_condition: Option<CondExpr>,
    pub priority: usize,
}

pub type Bindings = HashMap<VarId, Expr>;

impl RewriteRule {
    /// Evaluates the side condition and the computed constants. `Ok(None)`
    /// means the rule does not apply: the condition is false or undefined,
    /// or a computed constant is undefined or outside the literal range.
    pub fn fire_check(
        &self,
        lookup: &dyn Fn(&Var) -> Result<CondValue, CondError>,
    ) -> Result<Option<Vec<(VarId, i128)>>, CondError> {
        if let Some(c) = &self.side_condition {
            match eval_cond(c, lookup)? {
                Some(CondValue::Bool(true)) => {}
                Some(CondValue::Bool(false)) | None => return Ok(None),
                Some(CondValue::Int(_)) => return Err(CondError::IllTyped("condition is not boolean".into())),
            }
        }
        let mut out = Vec::with_capacity(self.computed.len());
        for (v, c) in &self.computed {
            match eval_cond(c, lookup)? {
                Some(CondValue::Int(n)) => match i128::try_from(n) {
                    Ok(n) => out.push((v.id, n)),
                    Err(_) => return Ok(None),
                },
                None => return Ok(None),
                Some(CondValue::Bool(_)) => {
                    return Err(CondError::IllTyped("computed constant is not an integer".into()))
                }
            }
        }
        Ok(Some(out))
    }

    /// Structural equality of two rules up to the identity of their
    /// variables.
    pub fn equiv(&self, other: &RewriteRule) -> bool {
        if self.name != other.name
            || self.vars.len() != other.vars.len()
            || self.computed.len() != other.computed.len()
            || self.side_condition.is_some() != other.side_condition.is_some()
        {
            return false;
        }
        let mut rename = HashMap::new();
        for (a, b) in self.vars.iter().zip(&other.vars) {
            if a.var.name != b.var.name || a.ty != b.ty || a.constant != b.constant {
                return false;
            }
            rename.insert(a.var.id, b.var.id);
        }
        for ((a, ca), (b, cb)) in self.computed.iter().zip(&other.computed) {
            if !ca.equiv(cb, &rename) {
                return false;
            }
            rename.insert(a.id, b.id);
        }
        if let (Some(a), Some(b)) = (&self.side_condition, &other.side_condition) {
            if !a.equiv(b, &rename) {
                return false;
            }
        }
        if !self.lhs.equiv(&other.lhs, &rename) {
            return false;
        }
        let sub: HashMap<VarId, Expr> = self
            .vars
            .iter()
            .map(|p| p.var.clone())
            .chain(self.computed.iter().map(|(v, _)| v.clone()))
            .map(|v| {
                let target = rename[&v.id];
                (v.id, Expr::var(&Var { id: target, name: v.name.clone() }))
            })
            .collect();
        crate::expr::alpha_eq(&crate::expr::substitute(&self.rhs, &sub), &other.rhs)
    }
}

/// True iff `e` is built only from literals and fully applied pairs and
/// conses of constants.
pub fn is_constant(e: &Expr) -> bool {
    stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || {
        let mut cur = e;
        loop {
            match cur.kind() {
                ExprKind::Ident(i) => return i.is_literal(),
                ExprKind::App(f, tail) => match f.kind() {
                    ExprKind::App(h, a) => match h.as_ident() {
                        Some(Ident::Cons(_)) => {
                            if !is_constant(a) {
                                return false;
                            }
                            cur = tail;
                        }
                        Some(Ident::PairMk(..)) => return is_constant(a) && is_constant(tail),
                        _ => return false,
                    },
                    _ => return false,
                },
                _ => return false,
            }
        }
    })
}

/// Naive structural match at the root.
pub fn match_pattern(p: &Pattern, e: &Expr) -> Option<Bindings> {
    fn go(p: &Pattern, e: &Expr, out: &mut Bindings) -> bool {
        match p {
            Pattern::Wildcard(v) => {
                out.insert(v.id, e.clone());
                true
            }
            Pattern::ConstWildcard(v) => {
                if is_constant(e) {
                    out.insert(v.id, e.clone());
                    true
                } else {
                    false
                }
            }
            Pattern::Ident(i) => e.as_ident() == Some(i),
            Pattern::App(pf, pa) => match e.kind() {
                ExprKind::App(f, a) => go(pf, f, out) && go(pa, a, out),
                _ => false,
            },
        }
    }
    let mut out = Bindings::new();
    go(p, e, &mut out).then_some(out)
}

pub type OccId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafBind {
    pub var: VarId,
    pub occ: OccId,
    pub constant: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppCase {
    pub fn_occ: OccId,
    pub arg_occ: OccId,
    pub tree: DecisionTree,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionTree {
    /// Try rule `rule` with the listed bindings; continue with
    /// `on_failure` if it is rejected.
    TryLeaf { rule: usize, binds: Vec<LeafBind>, on_failure: Box<DecisionTree> },
    Failure,
    /// Inspect slot 0: an identifier selects an `icases` branch, an
    /// application splits into function and argument. Slot 0 is consumed.
    Switch { icases: Vec<(Ident, DecisionTree)>, app_case: Option<Box<AppCase>>, default: Box<DecisionTree> },
    /// Exchange slot 0 and slot `i`.
    Swap(usize, Box<DecisionTree>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledRules {
    pub tree: DecisionTree,
    pub num_occs: usize,
    pub num_rules: usize,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("no rules to compile")]
    EmptyRuleSet,
    #[error("rule {0} has a bare pattern variable as its left-hand side")]
    BareWildcard(usize),
    #[error("rule {rule} uses pattern variable `{var}` more than once")]
    NonLinear { rule: usize, var: String },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MatchError {
    #[error("malformed decision tree: swap with slot {0} of {1}")]
    MalformedTree(usize, usize),
    #[error(transparent)]
    Condition(#[from] CondError),
}

#[derive(Clone)]
struct Row<'a> {
    pats: Vec<Option<&'a Pattern>>,
    rule: usize,
    binds: Vec<LeafBind>,
}

fn record(row: &mut Row<'_>, p: Option<&Pattern>, occ: OccId) {
    match p {
        Some(Pattern::Wildcard(v)) => row.binds.push(LeafBind { var: v.id, occ, constant: false }),
        Some(Pattern::ConstWildcard(v)) => row.binds.push(LeafBind { var: v.id, occ, constant: true }),
        _ => {}
    }
}

/// The row with its slot-0 wildcard recorded and replaced by `extra`
/// anonymous wildcards.
fn wild_row<'a>(r: &Row<'a>, occ: OccId, extra: usize) -> Row<'a> {
    let mut r = r.clone();
    let p = r.pats[0];
    record(&mut r, p, occ);
    let mut pats = vec![None; extra];
    pats.extend_from_slice(&r.pats[1..]);
    r.pats = pats;
    r
}

fn is_wild(p: &Option<&Pattern>) -> bool {
    p.is_none_or(Pattern::is_wildcard)
}

struct Compiler {
    next_occ: OccId,
}

impl Compiler {
    fn compile(&mut self, rows: Vec<Row<'_>>, cols: Vec<OccId>) -> DecisionTree {
        let Some(first) = rows.first() else { return DecisionTree::Failure };
        if first.pats.iter().all(is_wild) {
            let mut rows = rows;
            let mut head = rows.remove(0);
            for (p, occ) in head.pats.clone().into_iter().zip(&cols) {
                record(&mut head, p, *occ);
            }
            let on_failure = self.compile(rows, cols);
            return DecisionTree::TryLeaf { rule: head.rule, binds: head.binds, on_failure: Box::new(on_failure) };
        }
        let col = (0..cols.len())
            .find(|&c| rows.iter().any(|r| !is_wild(&r.pats[c])))
            .expect("a non-wildcard column exists");
        if col != 0 {
            let mut rows = rows;
            for r in &mut rows {
                r.pats.swap(0, col);
            }
            let mut cols = cols;
            cols.swap(0, col);
            return DecisionTree::Swap(col, Box::new(self.compile(rows, cols)));
        }

        let occ = cols[0];
        let rest_cols: Vec<OccId> = cols[1..].to_vec();
        let mut heads: Vec<&Ident> = Vec::new();
        let mut has_app = false;
        for r in &rows {
            match r.pats[0] {
                Some(Pattern::Ident(i)) if !heads.contains(&i) => heads.push(i),
                Some(Pattern::App(..)) => has_app = true,
                _ => {}
            }
        }

        let mut icases = Vec::new();
        for h in heads {
            let sub: Vec<Row<'_>> = rows
                .iter()
                .filter_map(|r| match r.pats[0] {
                    Some(Pattern::Ident(i)) if i == h => {
                        let mut r = r.clone();
                        r.pats.remove(0);
                        Some(r)
                    }
                    p if is_wild(&p) => Some(wild_row(r, occ, 0)),
                    _ => None,
                })
                .collect();
            icases.push((h.clone(), self.compile(sub, rest_cols.clone())));
        }

        let app_case = has_app.then(|| {
            let (fo, ao) = (self.next_occ, self.next_occ + 1);
            self.next_occ += 2;
            let sub: Vec<Row<'_>> = rows
                .iter()
                .filter_map(|r| match r.pats[0] {
                    Some(Pattern::App(f, a)) => {
                        let mut r = r.clone();
                        let mut pats = vec![Some(&**f), Some(&**a)];
                        pats.extend_from_slice(&r.pats[1..]);
                        r.pats = pats;
                        Some(r)
                    }
                    p if is_wild(&p) => Some(wild_row(r, occ, 2)),
                    _ => None,
                })
                .collect();
            let mut sub_cols = vec![fo, ao];
            sub_cols.extend_from_slice(&rest_cols);
            Box::new(AppCase { fn_occ: fo, arg_occ: ao, tree: self.compile(sub, sub_cols) })
        });

        let default_rows: Vec<Row<'_>> =
            rows.iter().filter(|r| is_wild(&r.pats[0])).map(|r| wild_row(r, occ, 0)).collect();
        let default = self.compile(default_rows, rest_cols);
        DecisionTree::Switch { icases, app_case, default: Box::new(default) }
    }
}

/// Compiles left-hand sides, in priority order, to a decision tree.
pub fn compile_patterns(lhss: &[&Pattern]) -> Result<CompiledRules, CompileError> {
    if lhss.is_empty() {
        return Err(CompileError::EmptyRuleSet);
    }
    for (k, p) in lhss.iter().enumerate() {
        if p.is_wildcard() {
            return Err(CompileError::BareWildcard(k));
        }
        let mut seen = HashSet::new();
        for v in p.vars() {
            if !seen.insert(v.id) {
                return Err(CompileError::NonLinear { rule: k, var: v.name.to_string() });
            }
        }
    }
    let rows = lhss
        .iter()
        .enumerate()
        .map(|(k, p)| Row { pats: vec![Some(*p)], rule: k, binds: Vec::new() })
        .collect();
    let mut c = Compiler { next_occ: 1 };
    let tree = c.compile(rows, vec![0]);
    Ok(CompiledRules { tree, num_occs: c.next_occ, num_rules: lhss.len() })
}

pub fn compile_rules(rules: &[RewriteRule]) -> Result<CompiledRules, CompileError> {
    let lhss: Vec<&Pattern> = rules.iter().map(|r| &r.lhs).collect();
    compile_patterns(&lhss)
}

/// Anything the decision-tree evaluator can decompose.
pub trait Matchable: Clone {
    fn head_ident(&self) -> Option<&Ident>;
    fn app_parts(&self) -> Option<(Self, Self)>;
    fn is_constant(&self) -> bool;
}

impl Matchable for Expr {
    fn head_ident(&self) -> Option<&Ident> {
        self.as_ident()
    }

    fn app_parts(&self) -> Option<(Self, Self)> {
        match self.kind() {
            ExprKind::App(f, a) => Some((f.clone(), a.clone())),
            _ => None,
        }
    }

    fn is_constant(&self) -> bool {
        is_constant(self)
    }
}

/// Walks `compiled` over `e`. On each leaf whose constant checks pass,
/// `try_rule` is called with the rule index and bindings; the first `Some`
/// it returns is the result.
pub fn eval_decision_tree<T: Matchable, R>(
    compiled: &CompiledRules,
    e: &T,
    mut try_rule: impl FnMut(usize, &HashMap<VarId, T>) -> Result<Option<R>, MatchError>,
) -> Result<Option<R>, MatchError> {
    let mut table: Vec<Option<T>> = vec![None; compiled.num_occs];
    table[0] = Some(e.clone());
    let mut slots: Vec<T> = vec![e.clone()];
    let mut node = &compiled.tree;
    loop {
        match node {
            DecisionTree::Failure => return Ok(None),
            DecisionTree::Swap(i, cont) => {
                if *i >= slots.len() {
                    return Err(MatchError::MalformedTree(*i, slots.len()));
                }
                slots.swap(0, *i);
                node = cont;
            }
            DecisionTree::TryLeaf { rule, binds, on_failure } => {
                let mut b = HashMap::with_capacity(binds.len());
                let mut ok = true;
                for lb in binds {
                    let v = table[lb.occ].clone().ok_or(MatchError::MalformedTree(lb.occ, table.len()))?;
                    if lb.constant && !v.is_constant() {
                        ok = false;
                        break;
                    }
                    b.insert(lb.var, v);
                }
                if ok {
                    if let Some(r) = try_rule(*rule, &b)? {
                        return Ok(Some(r));
                    }
                }
                node = on_failure;
            }
            DecisionTree::Switch { icases, app_case, default } => {
                if slots.is_empty() {
                    return Err(MatchError::MalformedTree(0, 0));
                }
                let v = slots.remove(0);
                if let Some(i) = v.head_ident() {
                    node = icases.iter().find(|(c, _)| c == i).map(|(_, t)| t).unwrap_or(default);
                } else if let (Some((f, a)), Some(case)) = (v.app_parts(), app_case) {
                    table[case.fn_occ] = Some(f.clone());
                    table[case.arg_occ] = Some(a.clone());
                    slots.insert(0, a);
                    slots.insert(0, f);
                    node = &case.tree;
                } else {
                    node = default;
                }
            }
        }
    }
}

/// A rule list with its compiled matcher and the symbols it mentions.
#[derive(Clone, Debug, Default)]
pub struct RuleSet {
    pub rules: Vec<RewriteRule>,
    pub compiled: Option<CompiledRules>,
    pub symbols: Vec<Arc<Symbol>>,
}

impl RuleSet {
    pub fn new(rules: Vec<RewriteRule>, symbols: Vec<Arc<Symbol>>) -> Result<Self, CompileError> {
        let compiled = if rules.is_empty() { None } else { Some(compile_rules(&rules)?) };
        Ok(RuleSet { rules, compiled, symbols })
    }

    pub fn empty() -> Self {
        RuleSet::default()
    }

    pub fn rule_index(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name == name)
    }

    pub fn extend(&self, other: &RuleSet) -> Result<RuleSet, CompileError> {
        let mut rules = self.rules.clone();
        for r in &other.rules {
            let mut r = r.clone();
            r.priority = rules.len();
            rules.push(r);
        }
        let mut symbols = self.symbols.clone();
        for s in &other.symbols {
            if !symbols.iter().any(|t| t.name == s.name) {
                symbols.push(s.clone());
            }
        }
        RuleSet::new(rules, symbols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BaseKind;

    fn w(name: &str) -> (Var, Pattern) {
        let v = Var::fresh(name);
        (v.clone(), Pattern::Wildcard(v))
    }

    fn pid(i: Ident) -> Pattern {
        Pattern::Ident(i)
    }

    fn bin(op: Ident, a: Pattern, b: Pattern) -> Pattern {
        Pattern::app(Pattern::app(pid(op), a), b)
    }

    fn ii() -> (BaseKind, BaseKind) {
        (BaseKind::Int, BaseKind::Int)
    }

    /// `?n + 0` and `fst (?x, ?y)`.
    fn two_rules() -> (Vec<Pattern>, Var, Var, Var) {
        let (n, pn) = w("n");
        let (x, px) = w("x");
        let (y, py) = w("y");
        let (a, b) = ii();
        let add0 = bin(Ident::Add, pn, pid(Ident::IntLit(0)));
        let fst = Pattern::app(pid(Ident::Fst(a.clone(), b.clone())), bin(Ident::PairMk(a, b), px, py));
        (vec![add0, fst], n, x, y)
    }

    fn compile(ps: &[Pattern]) -> CompiledRules {
        compile_patterns(&ps.iter().collect::<Vec<_>>()).unwrap()
    }

    fn first_match(c: &CompiledRules, e: &Expr) -> Option<(usize, Bindings)> {
        eval_decision_tree(c, e, |k, b: &Bindings| Ok(Some((k, b.clone())))).unwrap()
    }

    #[test]
    fn two_rule_tree_has_expected_shape() {
        let (ps, ..) = two_rules();
        let c = compile(&ps);
        let DecisionTree::Switch { icases, app_case: Some(app), .. } = &c.tree else {
            panic!("root should switch on application: {:?}", c.tree)
        };
        assert!(icases.is_empty());
        let DecisionTree::Switch { icases, app_case: Some(inner), .. } = &app.tree else { panic!() };
        // fst branch leads through pair to rule 1
        assert!(matches!(icases[0].0, Ident::Fst(..)));
        fn reaches(t: &DecisionTree, rule: usize) -> bool {
            match t {
                DecisionTree::TryLeaf { rule: r, on_failure, .. } => *r == rule || reaches(on_failure, rule),
                DecisionTree::Failure => false,
                DecisionTree::Swap(_, c) => reaches(c, rule),
                DecisionTree::Switch { icases, app_case, default } => {
                    icases.iter().any(|(_, t)| reaches(t, rule))
                        || app_case.as_ref().is_some_and(|a| reaches(&a.tree, rule))
                        || reaches(default, rule)
                }
            }
        }
        assert!(reaches(&icases[0].1, 1));
        // + branch: swap 0 and 1, then the literal 0, then rule 0
        let DecisionTree::Switch { icases, .. } = &inner.tree else { panic!() };
        assert_eq!(icases[0].0, Ident::Add);
        let DecisionTree::Swap(1, after) = &icases[0].1 else { panic!("expected swap: {:?}", icases[0].1) };
        let DecisionTree::Switch { icases, .. } = &**after else { panic!() };
        assert_eq!(icases[0].0, Ident::IntLit(0));
        assert!(matches!(icases[0].1, DecisionTree::TryLeaf { rule: 0, .. }));
    }

    #[test]
    fn two_rule_tree_matches() {
        let (ps, n, x, y) = two_rules();
        let c = compile(&ps);
        let (a, b) = (Var::fresh("a"), Var::fresh("b"));
        let (k1, k2) = ii();
        let e = Expr::app(
            Expr::ident(Ident::Fst(k1.clone(), k2.clone())),
            Expr::binop(Ident::PairMk(k1, k2), Expr::var(&a), Expr::var(&b)),
        );
        let (k, bnd) = first_match(&c, &e).unwrap();
        assert_eq!(k, 1);
        assert_eq!(bnd[&x.id].as_var(), Some(&a));
        assert_eq!(bnd[&y.id].as_var(), Some(&b));

        let prod = Expr::binop(Ident::Mul, Expr::var(&a), Expr::var(&b));
        assert!(first_match(&c, &prod).is_none());

        let a1 = Expr::binop(Ident::Add, Expr::var(&a), Expr::int(1));
        let e = Expr::binop(Ident::Add, a1.clone(), Expr::int(0));
        let (k, bnd) = first_match(&c, &e).unwrap();
        assert_eq!(k, 0);
        assert!(bnd[&n.id].ptr_eq(&a1));
    }

    #[test]
    fn shared_head_is_switched_once() {
        let k = BaseKind::Int;
        let map = Arc::new(Symbol {
            name: "map".into(),
            ty: ObjType::arrows([ObjType::arrow(ObjType::INT, ObjType::INT), ObjType::list(k.clone())], ObjType::list(k.clone())),
            definition: None,
        });
        let (_, f1) = w("f");
        let (_, f2) = w("f");
        let (_, x) = w("x");
        let (_, xs) = w("xs");
        let nil = Pattern::app(Pattern::app(pid(Ident::Opaque(map.clone())), f1), pid(Ident::Nil(k.clone())));
        let cons = Pattern::app(Pattern::app(pid(Ident::Opaque(map.clone())), f2), bin(Ident::Cons(k), x, xs));
        let c = compile(&[nil, cons]);
        fn count(t: &DecisionTree, i: &Ident) -> usize {
            match t {
                DecisionTree::TryLeaf { on_failure, .. } => count(on_failure, i),
                DecisionTree::Failure => 0,
                DecisionTree::Swap(_, c) => count(c, i),
                DecisionTree::Switch { icases, app_case, default } => {
                    icases.iter().map(|(c, t)| usize::from(c == i) + count(t, i)).sum::<usize>()
                        + app_case.as_ref().map_or(0, |a| count(&a.tree, i))
                        + count(default, i)
                }
            }
        }
        assert_eq!(count(&c.tree, &Ident::Opaque(map)), 1);
    }

    #[test]
    fn bare_wildcard_and_empty_sets_are_rejected() {
        let (_, p) = w("x");
        assert_eq!(compile_patterns(&[&p]), Err(CompileError::BareWildcard(0)));
        assert_eq!(compile_patterns(&[]), Err(CompileError::EmptyRuleSet));
        let (v, p) = w("x");
        let nl = bin(Ident::Add, p.clone(), Pattern::Wildcard(v));
        assert!(matches!(compile_patterns(&[&nl]), Err(CompileError::NonLinear { .. })));
    }

    #[test]
    fn naive_matching_and_constants() {
        let (n, pn) = w("n");
        let add0 = bin(Ident::Add, pn, pid(Ident::IntLit(0)));
        let b = match_pattern(&add0, &Expr::binop(Ident::Add, Expr::int(7), Expr::int(0))).unwrap();
        assert_eq!(b[&n.id].as_int(), Some(7));
        assert!(match_pattern(&add0, &Expr::binop(Ident::Add, Expr::int(7), Expr::int(1))).is_none());

        let m = Var::fresh("m");
        let (nn, pnn) = w("n");
        let div = bin(Ident::Div, pnn, Pattern::ConstWildcard(m.clone()));
        let x = Var::fresh("x");
        let b = match_pattern(&div, &Expr::binop(Ident::Div, Expr::var(&x), Expr::int(4))).unwrap();
        assert_eq!(b[&nn.id].as_var(), Some(&x));
        assert_eq!(b[&m.id].as_int(), Some(4));
        let y = Var::fresh("y");
        assert!(match_pattern(&div, &Expr::binop(Ident::Div, Expr::var(&x), Expr::var(&y))).is_none());

        assert!(is_constant(&Expr::int(4)));
        assert!(!is_constant(&Expr::var(&x)));
        let (a, b) = ii();
        assert!(is_constant(&Expr::binop(Ident::PairMk(a, b), Expr::int(1), Expr::int(2))));
    }

    #[test]
    fn swap_out_of_range_is_malformed() {
        let c = CompiledRules {
            tree: DecisionTree::Swap(3, Box::new(DecisionTree::Failure)),
            num_occs: 1,
            num_rules: 0,
        };
        let r = eval_decision_tree(&c, &Expr::int(0), |_, _| Ok(Some(())));
        assert_eq!(r, Err(MatchError::MalformedTree(3, 1)));
    }
}
