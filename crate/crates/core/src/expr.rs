//! Term syntax.
//!
//! Binders are identified by globally unique integers handed out by a single
//! atomic counter; the attached name is only a printing hint. Terms are
//! immutable and reference counted, so cloning is O(1).

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use crate::ident::Ident;
use crate::types::ObjType;

pub type VarId = u64;

static NEXT_VAR: AtomicU64 = AtomicU64::new(1);

/// A variable: unique id plus a name hint.
#[derive(Clone, Debug)]
pub struct Var {
    pub id: VarId,
    pub name: Arc<str>,
}

impl Var {
    pub fn fresh(name: impl Into<Arc<str>>) -> Self {
        Var { id: NEXT_VAR.fetch_add(1, Ordering::Relaxed), name: name.into() }
    }

    /// Fresh variable reusing this one's name hint.
    pub fn refresh(&self) -> Self {
        Var::fresh(self.name.clone())
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Var {}

impl Hash for Var {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

#[derive(Debug)]
pub enum ExprKind {
    Var(Var),
    Abs(Var, ObjType, Expr),
    App(Expr, Expr),
    LetIn(Var, Expr, Expr),
    Ident(Ident),
}

#[derive(Clone)]
pub struct Expr(Arc<ExprKind>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::syntax::print_expr(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_expr(self))
    }
}

fn placeholder() -> Expr {
    static P: OnceLock<Expr> = OnceLock::new();
    P.get_or_init(|| Expr(Arc::new(ExprKind::Ident(Ident::Unit)))).clone()
}

// Long let chains would otherwise overflow the stack when dropped.
impl Drop for Expr {
    fn drop(&mut self) {
        let mut stack: Vec<Expr> = Vec::new();
        take_children(&mut self.0, &mut stack);
        while let Some(mut e) = stack.pop() {
            take_children(&mut e.0, &mut stack);
        }
    }
}

fn take_children(node: &mut Arc<ExprKind>, out: &mut Vec<Expr>) {
    let Some(kind) = Arc::get_mut(node) else { return };
    match kind {
        ExprKind::Abs(_, _, b) => {
            if b.is_shared_or_leaf() {
                return;
            }
            out.push(std::mem::replace(b, placeholder()));
        }
        ExprKind::App(f, a) => {
            if !f.is_shared_or_leaf() {
                out.push(std::mem::replace(f, placeholder()));
            }
            if !a.is_shared_or_leaf() {
                out.push(std::mem::replace(a, placeholder()));
            }
        }
        ExprKind::LetIn(_, r, b) => {
            if !r.is_shared_or_leaf() {
                out.push(std::mem::replace(r, placeholder()));
            }
            if !b.is_shared_or_leaf() {
                out.push(std::mem::replace(b, placeholder()));
            }
        }
        ExprKind::Var(_) | ExprKind::Ident(_) => {}
    }
}

impl Expr {
    fn is_shared_or_leaf(&self) -> bool {
        Arc::strong_count(&self.0) > 1
            || matches!(&*self.0, ExprKind::Var(_) | ExprKind::Ident(_))
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Address of the shared node, stable while the node is alive.
    pub fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as *const u8 as usize
    }

    pub fn var(v: &Var) -> Self {
        Expr(Arc::new(ExprKind::Var(v.clone())))
    }

    pub fn abs(v: Var, ty: ObjType, body: Expr) -> Self {
        Expr(Arc::new(ExprKind::Abs(v, ty, body)))
    }

    pub fn app(f: Expr, a: Expr) -> Self {
        Expr(Arc::new(ExprKind::App(f, a)))
    }

    pub fn apps(f: Expr, args: impl IntoIterator<Item = Expr>) -> Self {
        args.into_iter().fold(f, Expr::app)
    }

    pub fn let_in(v: Var, rhs: Expr, body: Expr) -> Self {
        Expr(Arc::new(ExprKind::LetIn(v, rhs, body)))
    }

    pub fn ident(i: Ident) -> Self {
        Expr(Arc::new(ExprKind::Ident(i)))
    }

    pub fn int(n: i128) -> Self {
        Expr::ident(Ident::IntLit(n))
    }

    /// `op a b` for a binary identifier.
    pub fn binop(op: Ident, a: Expr, b: Expr) -> Self {
        Expr::apps(Expr::ident(op), [a, b])
    }

    pub fn as_ident(&self) -> Option<&Ident> {
        match self.kind() {
            ExprKind::Ident(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self.kind() {
            ExprKind::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i128> {
        self.as_ident().and_then(Ident::as_int)
    }

    /// Splits an application spine into its head and arguments.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut args = Vec::new();
        let mut head = self;
        while let ExprKind::App(f, a) = head.kind() {
            args.push(a);
            head = f;
        }
        args.reverse();
        (head, args)
    }

    /// Elements of a `cons`/`nil` chain, if the term is one.
    pub fn as_list_literal(&self) -> Option<Vec<&Expr>> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            let (head, args) = cur.spine();
            match (head.as_ident(), args.as_slice()) {
                (Some(Ident::Nil(_)), []) => return Some(items),
                (Some(Ident::Cons(_)), [h, t]) => {
                    items.push(*h);
                    cur = t;
                }
                _ => return None,
            }
        }
    }
}

/// Structural equality up to consistent renaming of bound variables.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    let mut left: HashMap<VarId, VarId> = HashMap::new();
    let mut right: HashMap<VarId, VarId> = HashMap::new();
    alpha_go(a, b, &mut left, &mut right)
}

fn bind_pair(
    x: &Var,
    y: &Var,
    left: &mut HashMap<VarId, VarId>,
    right: &mut HashMap<VarId, VarId>,
) -> (Option<VarId>, Option<VarId>) {
    (left.insert(x.id, y.id), right.insert(y.id, x.id))
}

fn unbind_pair(
    x: &Var,
    y: &Var,
    saved: (Option<VarId>, Option<VarId>),
    left: &mut HashMap<VarId, VarId>,
    right: &mut HashMap<VarId, VarId>,
) {
    match saved.0 {
        Some(p) => left.insert(x.id, p),
        None => left.remove(&x.id),
    };
    match saved.1 {
        Some(p) => right.insert(y.id, p),
        None => right.remove(&y.id),
    };
}

fn alpha_go(
    a: &Expr,
    b: &Expr,
    left: &mut HashMap<VarId, VarId>,
    right: &mut HashMap<VarId, VarId>,
) -> bool {
    stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || match (a.kind(), b.kind()) {
        (ExprKind::Var(x), ExprKind::Var(y)) => match (left.get(&x.id), right.get(&y.id)) {
            (Some(x2), Some(y2)) => *x2 == y.id && *y2 == x.id,
            (None, None) => x.id == y.id,
            _ => false,
        },
        (ExprKind::Ident(i), ExprKind::Ident(j)) => i == j,
        (ExprKind::App(f1, a1), ExprKind::App(f2, a2)) => {
            alpha_go(f1, f2, left, right) && alpha_go(a1, a2, left, right)
        }
        (ExprKind::Abs(x, tx, b1), ExprKind::Abs(y, ty, b2)) => {
            if tx != ty {
                return false;
            }
            let saved = bind_pair(x, y, left, right);
            let r = alpha_go(b1, b2, left, right);
            unbind_pair(x, y, saved, left, right);
            r
        }
        (ExprKind::LetIn(x, r1, b1), ExprKind::LetIn(y, r2, b2)) => {
            if !alpha_go(r1, r2, left, right) {
                return false;
            }
            let saved = bind_pair(x, y, left, right);
            let r = alpha_go(b1, b2, left, right);
            unbind_pair(x, y, saved, left, right);
            r
        }
        _ => false,
    })
}

/// Exact structural counts of a term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TermStats {
    /// Non-application nodes; an application spine counts through its head
    /// and arguments, so `x + 0` has three nodes.
    pub node_count: usize,
    pub let_count: usize,
    pub max_binder_depth: usize,
}

pub fn term_stats(e: &Expr) -> TermStats {
    let mut stats = TermStats::default();
    let mut stack: Vec<(&Expr, usize)> = vec![(e, 0)];
    while let Some((e, depth)) = stack.pop() {
        stats.max_binder_depth = stats.max_binder_depth.max(depth);
        match e.kind() {
            ExprKind::Var(_) | ExprKind::Ident(_) => stats.node_count += 1,
            ExprKind::App(f, a) => {
                stack.push((f, depth));
                stack.push((a, depth));
            }
            ExprKind::Abs(_, _, b) => {
                stats.node_count += 1;
                stack.push((b, depth + 1));
            }
            ExprKind::LetIn(_, r, b) => {
                stats.node_count += 1;
                stats.let_count += 1;
                stack.push((r, depth));
                stack.push((b, depth + 1));
            }
        }
    }
    stats
}

/// Every node, applications included.
pub fn node_size(e: &Expr) -> usize {
    let mut n = 0;
    let mut stack = vec![e];
    while let Some(e) = stack.pop() {
        n += 1;
        match e.kind() {
            ExprKind::Var(_) | ExprKind::Ident(_) => {}
            ExprKind::App(f, a) => {
                stack.push(f);
                stack.push(a);
            }
            ExprKind::Abs(_, _, b) => stack.push(b),
            ExprKind::LetIn(_, r, b) => {
                stack.push(r);
                stack.push(b);
            }
        }
    }
    n
}

/// Free variables in first-occurrence order.
pub fn free_vars(e: &Expr) -> Vec<Var> {
    struct Acc {
        bound: HashMap<VarId, usize>,
        seen: std::collections::HashSet<VarId>,
        out: Vec<Var>,
    }
    fn enter(acc: &mut Acc, id: VarId) {
        *acc.bound.entry(id).or_default() += 1;
    }
    fn leave(acc: &mut Acc, id: VarId) {
        if let Some(n) = acc.bound.get_mut(&id) {
            *n -= 1;
            if *n == 0 {
                acc.bound.remove(&id);
            }
        }
    }
    fn go(e: &Expr, acc: &mut Acc) {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || match e.kind() {
            ExprKind::Var(v) => {
                if !acc.bound.contains_key(&v.id) && acc.seen.insert(v.id) {
                    acc.out.push(v.clone());
                }
            }
            ExprKind::Ident(_) => {}
            ExprKind::App(f, a) => {
                go(f, acc);
                go(a, acc);
            }
            ExprKind::Abs(v, _, b) => {
                enter(acc, v.id);
                go(b, acc);
                leave(acc, v.id);
            }
            ExprKind::LetIn(..) => {
                let mut cur = e;
                let mut opened = Vec::new();
                while let ExprKind::LetIn(v, r, b) = cur.kind() {
                    go(r, acc);
                    enter(acc, v.id);
                    opened.push(v.id);
                    cur = b;
                }
                go(cur, acc);
                for id in opened {
                    leave(acc, id);
                }
            }
        })
    }
    let mut acc = Acc { bound: HashMap::new(), seen: Default::default(), out: Vec::new() };
    go(e, &mut acc);
    acc.out
}

/// True when no binder id occurs twice in the term.
pub fn has_unique_binders(e: &Expr) -> bool {
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![e];
    while let Some(e) = stack.pop() {
        match e.kind() {
            ExprKind::Var(_) | ExprKind::Ident(_) => {}
            ExprKind::App(f, a) => {
                stack.push(f);
                stack.push(a);
            }
            ExprKind::Abs(v, _, b) => {
                if !seen.insert(v.id) {
                    return false;
                }
                stack.push(b);
            }
            ExprKind::LetIn(v, r, b) => {
                if !seen.insert(v.id) {
                    return false;
                }
                stack.push(r);
                stack.push(b);
            }
        }
    }
    true
}

/// Capture-avoiding simultaneous substitution. Every binder inside the
/// result is fresh, so substituted copies never share binder ids.
pub fn substitute(e: &Expr, map: &HashMap<VarId, Expr>) -> Expr {
    fn go(e: &Expr, map: &mut HashMap<VarId, Expr>) -> Expr {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || match e.kind() {
            ExprKind::Var(v) => map.get(&v.id).cloned().unwrap_or_else(|| e.clone()),
            ExprKind::Ident(_) => e.clone(),
            ExprKind::App(f, a) => Expr::app(go(f, map), go(a, map)),
            ExprKind::Abs(v, t, b) => {
                let nv = v.refresh();
                let saved = map.insert(v.id, Expr::var(&nv));
                let body = go(b, map);
                restore(map, v.id, saved);
                Expr::abs(nv, t.clone(), body)
            }
            ExprKind::LetIn(v, r, b) => {
                let rhs = go(r, map);
                let nv = v.refresh();
                let saved = map.insert(v.id, Expr::var(&nv));
                let body = go(b, map);
                restore(map, v.id, saved);
                Expr::let_in(nv, rhs, body)
            }
        })
    }
    fn restore(map: &mut HashMap<VarId, Expr>, id: VarId, saved: Option<Expr>) {
        match saved {
            Some(s) => map.insert(id, s),
            None => map.remove(&id),
        };
    }
    let mut map = map.clone();
    go(e, &mut map)
}

/// Copy of the term with every binder renamed to a fresh id.
pub fn refresh_binders(e: &Expr) -> Expr {
    substitute(e, &HashMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Var {
        Var::fresh("x")
    }

    #[test]
    fn alpha_eq_identity_functions() {
        let (a, b) = (x(), Var::fresh("y"));
        let ia = Expr::abs(a.clone(), ObjType::INT, Expr::var(&a));
        let ib = Expr::abs(b.clone(), ObjType::INT, Expr::var(&b));
        assert!(alpha_eq(&ia, &ib));
        let k = Expr::abs(a.clone(), ObjType::INT, Expr::int(0));
        assert!(!alpha_eq(&ia, &k));
    }

    #[test]
    fn alpha_eq_lets() {
        let free = Var::fresh("e");
        let (a, b) = (Var::fresh("a"), Var::fresh("b"));
        let la = Expr::let_in(a.clone(), Expr::var(&free), Expr::var(&a));
        let lb = Expr::let_in(b.clone(), Expr::var(&free), Expr::var(&b));
        assert!(alpha_eq(&la, &lb));
        // a binder never equals a free variable
        let lc = Expr::let_in(b.clone(), Expr::var(&free), Expr::var(&free));
        assert!(!alpha_eq(&la, &lc));
    }

    #[test]
    fn alpha_eq_is_not_fooled_by_crossed_binders() {
        let (a, b) = (Var::fresh("a"), Var::fresh("b"));
        let (c, d) = (Var::fresh("c"), Var::fresh("d"));
        let t1 = Expr::abs(a.clone(), ObjType::INT, Expr::abs(b.clone(), ObjType::INT, Expr::var(&a)));
        let t2 = Expr::abs(c.clone(), ObjType::INT, Expr::abs(d.clone(), ObjType::INT, Expr::var(&d)));
        assert!(!alpha_eq(&t1, &t2));
    }

    #[test]
    fn stats_of_small_terms() {
        let v = x();
        assert_eq!(term_stats(&Expr::var(&v)), TermStats { node_count: 1, let_count: 0, max_binder_depth: 0 });
        let a = Var::fresh("a");
        let t = Expr::let_in(a.clone(), Expr::binop(Ident::Add, Expr::var(&v), Expr::int(0)), Expr::var(&a));
        let s = term_stats(&t);
        assert_eq!(s.let_count, 1);
        assert_eq!(s.node_count, 5);
        assert_eq!(s.max_binder_depth, 1);
    }

    #[test]
    fn substitution_refreshes_binders() {
        let (a, v) = (Var::fresh("a"), x());
        let t = Expr::let_in(a.clone(), Expr::var(&v), Expr::var(&a));
        let mut m = HashMap::new();
        m.insert(v.id, Expr::int(3));
        let s = substitute(&t, &m);
        match s.kind() {
            ExprKind::LetIn(b, r, body) => {
                assert_ne!(b.id, a.id);
                assert_eq!(r.as_int(), Some(3));
                assert_eq!(body.as_var().map(|v| v.id), Some(b.id));
            }
            _ => panic!("expected let"),
        }
    }

    #[test]
    fn dropping_a_long_chain_does_not_overflow() {
        let mut e = Expr::int(0);
        for _ in 0..200_000 {
            let v = Var::fresh("v");
            e = Expr::let_in(v, Expr::int(1), e);
        }
        drop(e);
    }

    #[test]
    fn list_literal_view() {
        let l = Expr::apps(
            Expr::ident(Ident::Cons(crate::types::BaseKind::Int)),
            [Expr::int(1), Expr::ident(Ident::Nil(crate::types::BaseKind::Int))],
        );
        assert_eq!(l.as_list_literal().map(|v| v.len()), Some(1));
        assert!(Expr::int(1).as_list_literal().is_none());
    }
}
