//! Type inference for surface terms: unification over metavariables, then
//! instantiation of polymorphic identifier families. Unconstrained
//! metavariables default to `int`.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::lexer::Pos;
use super::parser::{Builtin, Family, SKind, STerm};
use super::ParseError;
use crate::expr::{Expr, ExprKind, Var, VarId};
use crate::ident::{Ident, Symbol};
use crate::side_cond::CondExpr;
use crate::types::{BaseKind, ObjType};

#[derive(Clone, Debug)]
pub(crate) enum MTy {
    Meta(usize),
    Int,
    Bool,
    Unit,
    List(Box<MTy>),
    Pair(Box<MTy>, Box<MTy>),
    Arrow(Box<MTy>, Box<MTy>),
}

impl MTy {
    fn arrow(a: MTy, b: MTy) -> MTy {
        MTy::Arrow(Box::new(a), Box::new(b))
    }

    fn arrows(args: Vec<MTy>, result: MTy) -> MTy {
        args.into_iter().rev().fold(result, |acc, a| MTy::arrow(a, acc))
    }

    fn list(a: MTy) -> MTy {
        MTy::List(Box::new(a))
    }

    fn pair(a: MTy, b: MTy) -> MTy {
        MTy::Pair(Box::new(a), Box::new(b))
    }

    pub(crate) fn from_base(b: &BaseKind) -> MTy {
        match b {
            BaseKind::Int => MTy::Int,
            BaseKind::Bool => MTy::Bool,
            BaseKind::Unit => MTy::Unit,
            BaseKind::List(e) => MTy::list(MTy::from_base(e)),
            BaseKind::Pair(a, c) => MTy::pair(MTy::from_base(a), MTy::from_base(c)),
        }
    }

    pub(crate) fn from_obj(t: &ObjType) -> MTy {
        match t {
            ObjType::Base(b) => MTy::from_base(b),
            ObjType::Arrow(d, c) => MTy::arrow(MTy::from_obj(d), MTy::from_obj(c)),
        }
    }
}

#[derive(Default, Clone)]
pub(crate) struct Unifier {
    subst: Vec<Option<MTy>>,
    base_only: Vec<bool>,
}

impl Unifier {
    pub(crate) fn fresh(&mut self, base: bool) -> MTy {
        self.subst.push(None);
        self.base_only.push(base);
        MTy::Meta(self.subst.len() - 1)
    }

    fn resolve(&self, t: &MTy) -> MTy {
        let mut t = t.clone();
        while let MTy::Meta(m) = t {
            match &self.subst[m] {
                Some(b) => t = b.clone(),
                None => return MTy::Meta(m),
            }
        }
        t
    }

    fn occurs(&self, m: usize, t: &MTy) -> bool {
        match self.resolve(t) {
            MTy::Meta(k) => k == m,
            MTy::Int | MTy::Bool | MTy::Unit => false,
            MTy::List(a) => self.occurs(m, &a),
            MTy::Pair(a, b) | MTy::Arrow(a, b) => self.occurs(m, &a) || self.occurs(m, &b),
        }
    }

    fn require_base(&mut self, t: &MTy) -> Result<(), String> {
        match self.resolve(t) {
            MTy::Meta(k) => {
                self.base_only[k] = true;
                Ok(())
            }
            MTy::Int | MTy::Bool | MTy::Unit => Ok(()),
            MTy::List(a) => self.require_base(&a),
            MTy::Pair(a, b) => {
                self.require_base(&a)?;
                self.require_base(&b)
            }
            MTy::Arrow(..) => Err("lists and pairs hold base types only".into()),
        }
    }

    fn bind(&mut self, m: usize, t: &MTy) -> Result<(), String> {
        if self.occurs(m, t) {
            return Err(format!("infinite type {} = {}", self.show(&MTy::Meta(m)), self.show(t)));
        }
        if self.base_only[m] {
            self.require_base(t)?;
        }
        self.subst[m] = Some(t.clone());
        Ok(())
    }

    pub(crate) fn unify(&mut self, a: &MTy, b: &MTy) -> Result<(), String> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            (MTy::Meta(x), MTy::Meta(y)) if x == y => Ok(()),
            (MTy::Meta(x), _) => self.bind(*x, &b),
            (_, MTy::Meta(y)) => self.bind(*y, &a),
            (MTy::Int, MTy::Int) | (MTy::Bool, MTy::Bool) | (MTy::Unit, MTy::Unit) => Ok(()),
            (MTy::List(x), MTy::List(y)) => self.unify(x, y),
            (MTy::Pair(x1, x2), MTy::Pair(y1, y2)) | (MTy::Arrow(x1, x2), MTy::Arrow(y1, y2)) => {
                self.unify(x1, y1)?;
                self.unify(x2, y2)
            }
            _ => Err(format!("expected {}, found {}", self.show(&b), self.show(&a))),
        }
    }

    pub(crate) fn is_ground(&self, t: &MTy) -> bool {
        match self.resolve(t) {
            MTy::Meta(_) => false,
            MTy::Int | MTy::Bool | MTy::Unit => true,
            MTy::List(a) => self.is_ground(&a),
            MTy::Pair(a, b) | MTy::Arrow(a, b) => self.is_ground(&a) && self.is_ground(&b),
        }
    }

    pub(crate) fn to_obj(&self, t: &MTy) -> ObjType {
        match self.resolve(t) {
            MTy::Meta(_) | MTy::Int => ObjType::INT,
            MTy::Bool => ObjType::BOOL,
            MTy::Unit => ObjType::UNIT,
            MTy::Arrow(a, b) => ObjType::arrow(self.to_obj(&a), self.to_obj(&b)),
            other => ObjType::Base(self.to_base(&other)),
        }
    }

    fn to_base(&self, t: &MTy) -> BaseKind {
        match self.resolve(t) {
            MTy::Meta(_) | MTy::Int => BaseKind::Int,
            MTy::Bool => BaseKind::Bool,
            MTy::Unit => BaseKind::Unit,
            MTy::List(a) => BaseKind::list(self.to_base(&a)),
            MTy::Pair(a, b) => BaseKind::pair(self.to_base(&a), self.to_base(&b)),
            // excluded by require_base
            MTy::Arrow(..) => BaseKind::Int,
        }
    }

    fn show(&self, t: &MTy) -> String {
        fn go(u: &Unifier, t: &MTy) -> ObjTypeShow {
            match u.resolve(t) {
                MTy::Meta(_) => ObjTypeShow("?".into(), 3),
                MTy::Int => ObjTypeShow("int".into(), 3),
                MTy::Bool => ObjTypeShow("bool".into(), 3),
                MTy::Unit => ObjTypeShow("unit".into(), 3),
                MTy::List(a) => ObjTypeShow(format!("list {}", go(u, &a).at(3)), 2),
                MTy::Pair(a, b) => ObjTypeShow(format!("{} * {}", go(u, &a).at(2), go(u, &b).at(2)), 1),
                MTy::Arrow(a, b) => ObjTypeShow(format!("{} -> {}", go(u, &a).at(1), go(u, &b).at(0)), 0),
            }
        }
        go(self, t).0
    }
}

struct ObjTypeShow(String, u8);

impl ObjTypeShow {
    fn at(self, min: u8) -> String {
        if self.1 < min {
            format!("({})", self.0)
        } else {
            self.0
        }
    }
}

/// Which type parameters of a family must be base types.
fn family_params(f: &Family) -> &'static [bool] {
    match f {
        Family::Nil | Family::Cons => &[true],
        Family::Fst | Family::Snd | Family::PairMk => &[true, true],
        Family::Comment(_) | Family::NatRect => &[false],
        Family::ListRect => &[true, false],
    }
}

fn family_ty(f: &Family, p: &[MTy]) -> MTy {
    match f {
        Family::Nil => MTy::list(p[0].clone()),
        Family::Fst => MTy::arrow(MTy::pair(p[0].clone(), p[1].clone()), p[0].clone()),
        Family::Snd => MTy::arrow(MTy::pair(p[0].clone(), p[1].clone()), p[1].clone()),
        Family::PairMk => MTy::arrows(vec![p[0].clone(), p[1].clone()], MTy::pair(p[0].clone(), p[1].clone())),
        Family::Cons => MTy::arrows(vec![p[0].clone(), MTy::list(p[0].clone())], MTy::list(p[0].clone())),
        Family::Comment(_) => MTy::arrow(p[0].clone(), p[0].clone()),
        Family::ListRect => {
            let (a, m) = (p[0].clone(), p[1].clone());
            let step = MTy::arrows(vec![a.clone(), MTy::list(a.clone()), m.clone()], m.clone());
            MTy::arrows(vec![m.clone(), step, MTy::list(a)], m)
        }
        Family::NatRect => {
            let m = p[0].clone();
            let step = MTy::arrows(vec![MTy::Int, m.clone()], m.clone());
            MTy::arrows(vec![m.clone(), step, MTy::Int], m)
        }
    }
}

fn family_ident(f: &Family, u: &Unifier, p: &[MTy]) -> Ident {
    let b = |i: usize| u.to_base(&p[i]);
    match f {
        Family::Nil => Ident::Nil(b(0)),
        Family::Fst => Ident::Fst(b(0), b(1)),
        Family::Snd => Ident::Snd(b(0), b(1)),
        Family::PairMk => Ident::PairMk(b(0), b(1)),
        Family::Cons => Ident::Cons(b(0)),
        Family::Comment(s) => Ident::Comment(s.clone(), u.to_obj(&p[0])),
        Family::ListRect => Ident::ListRect(b(0), u.to_obj(&p[1])),
        Family::NatRect => Ident::NatRect(u.to_obj(&p[0])),
    }
}

/// The family and instance types of a polymorphic identifier.
pub(crate) fn ident_family(i: &Ident) -> Option<(Family, Vec<ObjType>)> {
    let base = |k: &BaseKind| ObjType::Base(k.clone());
    Some(match i {
        Ident::Nil(k) => (Family::Nil, vec![base(k)]),
        Ident::Fst(a, b) => (Family::Fst, vec![base(a), base(b)]),
        Ident::Snd(a, b) => (Family::Snd, vec![base(a), base(b)]),
        Ident::PairMk(a, b) => (Family::PairMk, vec![base(a), base(b)]),
        Ident::Cons(k) => (Family::Cons, vec![base(k)]),
        Ident::Comment(s, t) => (Family::Comment(s.clone()), vec![t.clone()]),
        Ident::ListRect(k, m) => (Family::ListRect, vec![base(k), m.clone()]),
        Ident::NatRect(m) => (Family::NatRect, vec![m.clone()]),
        _ => return None,
    })
}

/// Names visible to a term besides its own binders.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    /// Named variables, optionally with known types.
    pub vars: HashMap<String, (Var, Option<ObjType>)>,
    /// Variables that may be referenced with the `'x` marker.
    pub constants: HashSet<String>,
    pub symbols: HashMap<String, Arc<Symbol>>,
}

impl Scope {
    pub fn new() -> Self {
        Scope::default()
    }

    pub fn with_var(mut self, v: &Var, ty: Option<ObjType>) -> Self {
        self.vars.insert(v.name.to_string(), (v.clone(), ty));
        self
    }

    pub fn with_symbol(mut self, s: Arc<Symbol>) -> Self {
        self.symbols.insert(s.name.to_string(), s);
        self
    }
}

/// Result of elaborating a term.
#[derive(Clone, Debug)]
pub struct Elaborated {
    pub expr: Expr,
    pub ty: ObjType,
    /// Free and scope variables the term mentions, with inferred types.
    pub free: Vec<(Var, ObjType)>,
    /// Constants written `'(...)`, as fresh integer variables.
    pub computed: Vec<(Var, CondExpr)>,
}

enum ETerm {
    Var(Var),
    Abs(Var, MTy, Box<ETerm>),
    App(Box<ETerm>, Box<ETerm>),
    Let(Var, Box<ETerm>, Box<ETerm>),
    Ident(Ident),
    Poly(Family, Vec<MTy>),
}

struct Elab<'s> {
    u: Unifier,
    scope: &'s Scope,
    env: Vec<(String, Var, MTy)>,
    free: Vec<(String, Var, MTy)>,
    computed: Vec<(Var, CondExpr)>,
}

fn err(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::at(pos, msg)
}

impl<'s> Elab<'s> {
    fn lookup_free(&mut self, name: &str) -> (Var, MTy) {
        if let Some((_, v, t)) = self.free.iter().find(|(n, _, _)| n == name) {
            return (v.clone(), t.clone());
        }
        let (v, t) = match self.scope.vars.get(name) {
            Some((v, Some(t))) => (v.clone(), MTy::from_obj(t)),
            Some((v, None)) => (v.clone(), self.u.fresh(false)),
            None => (Var::fresh(name), self.u.fresh(false)),
        };
        self.free.push((name.to_string(), v.clone(), t.clone()));
        (v, t)
    }

    fn builtin(&mut self, b: &Builtin) -> (ETerm, MTy) {
        match b {
            Builtin::Mono(i) => (ETerm::Ident(i.clone()), MTy::from_obj(&i.ty())),
            Builtin::Poly(f) => {
                let ps: Vec<MTy> = family_params(f).iter().map(|base| self.u.fresh(*base)).collect();
                let t = family_ty(f, &ps);
                (ETerm::Poly(f.clone(), ps), t)
            }
        }
    }

    fn infer(&mut self, s: &STerm) -> Result<(ETerm, MTy), ParseError> {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || self.infer_inner(s))
    }

    fn infer_inner(&mut self, s: &STerm) -> Result<(ETerm, MTy), ParseError> {
        match &s.kind {
            SKind::Name(n) => {
                if let Some((_, v, t)) = self.env.iter().rev().find(|(m, _, _)| m == n) {
                    return Ok((ETerm::Var(v.clone()), t.clone()));
                }
                if !self.scope.vars.contains_key(n) {
                    if let Some(b) = super::parser::builtin_by_name(n) {
                        return Ok(self.builtin(&b));
                    }
                    if let Some(sym) = self.scope.symbols.get(n) {
                        return Ok((ETerm::Ident(Ident::Opaque(sym.clone())), MTy::from_obj(&sym.ty)));
                    }
                }
                let (v, t) = self.lookup_free(n);
                Ok((ETerm::Var(v), t))
            }
            SKind::ConstRef(n) => {
                if !self.scope.constants.contains(n) {
                    return Err(err(s.pos, format!("`'{n}` does not name a constant rule variable")));
                }
                let (v, t) = self.lookup_free(n);
                Ok((ETerm::Var(v), t))
            }
            SKind::Computed(c) => {
                let v = Var::fresh("k");
                self.computed.push((v.clone(), c.clone()));
                Ok((ETerm::Var(v), MTy::Int))
            }
            SKind::Int(n) => Ok((ETerm::Ident(Ident::IntLit(*n)), MTy::Int)),
            SKind::Builtin(b) => Ok(self.builtin(b)),
            SKind::App(f, a) => {
                let (ef, tf) = self.infer(f)?;
                let (ea, ta) = self.infer(a)?;
                let r = self.u.fresh(false);
                match self.u.resolve(&tf) {
                    MTy::Arrow(d, _) => {
                        self.u.unify(&ta, &d).map_err(|m| err(a.pos, format!("argument type mismatch: {m}")))?;
                    }
                    MTy::Meta(_) => {}
                    other => {
                        return Err(err(f.pos, format!("a term of type {} cannot be applied", self.u.show(&other))))
                    }
                }
                self.u
                    .unify(&tf, &MTy::arrow(ta, r.clone()))
                    .map_err(|m| err(s.pos, format!("type mismatch: {m}")))?;
                Ok((ETerm::App(Box::new(ef), Box::new(ea)), r))
            }
            SKind::Lam(n, ann, body) => {
                let t = match ann {
                    Some(t) => MTy::from_obj(t),
                    None => self.u.fresh(false),
                };
                let v = Var::fresh(n.as_str());
                self.env.push((n.clone(), v.clone(), t.clone()));
                let r = self.infer(body);
                self.env.pop();
                let (eb, tb) = r?;
                Ok((ETerm::Abs(v, t.clone(), Box::new(eb)), MTy::arrow(t, tb)))
            }
            SKind::Let(n, ann, rhs, body) => {
                let (er, tr) = self.infer(rhs)?;
                if let Some(t) = ann {
                    self.u
                        .unify(&tr, &MTy::from_obj(t))
                        .map_err(|m| err(rhs.pos, format!("type mismatch: {m}")))?;
                }
                let v = Var::fresh(n.as_str());
                self.env.push((n.clone(), v.clone(), tr));
                let r = self.infer(body);
                self.env.pop();
                let (eb, tb) = r?;
                Ok((ETerm::Let(v, Box::new(er), Box::new(eb)), tb))
            }
            SKind::Ascribe(e, t) => {
                let (ee, te) = self.infer(e)?;
                self.u
                    .unify(&te, &MTy::from_obj(t))
                    .map_err(|m| err(s.pos, format!("type mismatch: {m}")))?;
                Ok((ee, te))
            }
        }
    }

    fn build(&self, t: &ETerm) -> Expr {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || match t {
            ETerm::Var(v) => Expr::var(v),
            ETerm::Abs(v, ty, b) => Expr::abs(v.clone(), self.u.to_obj(ty), self.build(b)),
            ETerm::App(f, a) => Expr::app(self.build(f), self.build(a)),
            ETerm::Let(v, r, b) => Expr::let_in(v.clone(), self.build(r), self.build(b)),
            ETerm::Ident(i) => Expr::ident(i.clone()),
            ETerm::Poly(f, ps) => Expr::ident(family_ident(f, &self.u, ps)),
        })
    }
}

/// Elaborates `s`. When `expected` is given and compatible it guides
/// inference; an incompatible expectation is ignored so the caller can
/// report the mismatch itself.
pub fn elaborate(s: &STerm, scope: &Scope, expected: Option<&ObjType>) -> Result<Elaborated, ParseError> {
    let mut el = Elab { u: Unifier::default(), scope, env: Vec::new(), free: Vec::new(), computed: Vec::new() };
    let (et, ty) = el.infer(s)?;
    if let Some(exp) = expected {
        let snapshot = el.u.clone();
        if el.u.unify(&ty, &MTy::from_obj(exp)).is_err() {
            el.u = snapshot;
        }
    }
    let expr = el.build(&et);
    let free = el.free.iter().map(|(_, v, t)| (v.clone(), el.u.to_obj(t))).collect();
    Ok(Elaborated { expr, ty: el.u.to_obj(&ty), free, computed: el.computed })
}

/// Identifier occurrences (by node address) whose instance types would not
/// be recovered by inference from the printed term, given the types of
/// the free variables in `known` (others are inferred from the term).
pub(crate) fn ambiguous_idents(e: &Expr, known: &HashMap<VarId, ObjType>) -> HashSet<usize> {
    struct Walk {
        u: Unifier,
        poly: bool,
        free: HashMap<VarId, MTy>,
        occurrences: Vec<(usize, Vec<MTy>)>,
    }
    impl Walk {
        fn go(&mut self, e: &Expr, env: &mut HashMap<VarId, MTy>) -> Result<MTy, String> {
            stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || match e.kind() {
                ExprKind::Var(v) => {
                    if let Some(t) = env.get(&v.id) {
                        return Ok(t.clone());
                    }
                    if let Some(t) = self.free.get(&v.id) {
                        return Ok(t.clone());
                    }
                    let t = self.u.fresh(false);
                    self.free.insert(v.id, t.clone());
                    Ok(t)
                }
                ExprKind::Ident(i) => match ident_family(i) {
                    Some((f, _)) if self.poly => {
                        let ps: Vec<MTy> = family_params(&f).iter().map(|b| self.u.fresh(*b)).collect();
                        self.occurrences.push((e.addr(), ps.clone()));
                        Ok(family_ty(&f, &ps))
                    }
                    _ => Ok(MTy::from_obj(&i.ty())),
                },
                ExprKind::App(f, a) => {
                    let tf = self.go(f, env)?;
                    let ta = self.go(a, env)?;
                    let r = self.u.fresh(false);
                    self.u.unify(&tf, &MTy::arrow(ta, r.clone()))?;
                    Ok(r)
                }
                ExprKind::Abs(v, t, b) => {
                    let t = MTy::from_obj(t);
                    let saved = env.insert(v.id, t.clone());
                    let r = self.go(b, env);
                    restore(env, v.id, saved);
                    Ok(MTy::arrow(t, r?))
                }
                ExprKind::LetIn(v, r, b) => {
                    let tr = self.go(r, env)?;
                    let saved = env.insert(v.id, tr);
                    let res = self.go(b, env);
                    restore(env, v.id, saved);
                    res
                }
            })
        }
    }
    fn restore(env: &mut HashMap<VarId, MTy>, id: VarId, saved: Option<MTy>) {
        match saved {
            Some(t) => env.insert(id, t),
            None => env.remove(&id),
        };
    }

    let seed: HashMap<VarId, MTy> = known.iter().map(|(k, t)| (*k, MTy::from_obj(t))).collect();
    // pass 1: instance types as written, to learn the free variables' types
    let mut first = Walk { u: Unifier::default(), poly: false, free: seed.clone(), occurrences: Vec::new() };
    if first.go(e, &mut HashMap::new()).is_err() {
        return HashSet::new();
    }
    // pass 2: instance types forgotten, as the parser sees them
    let mut second = Walk { u: Unifier::default(), poly: true, free: HashMap::new(), occurrences: Vec::new() };
    for (id, t) in &first.free {
        let t = if known.contains_key(id) || first.u.is_ground(t) {
            MTy::from_obj(&first.u.to_obj(t))
        } else {
            second.u.fresh(false)
        };
        second.free.insert(*id, t);
    }
    if second.go(e, &mut HashMap::new()).is_err() {
        return HashSet::new();
    }
    second
        .occurrences
        .iter()
        .filter(|(_, ps)| ps.iter().any(|p| !second.u.is_ground(p)))
        .map(|(addr, _)| *addr)
        .collect()
}
