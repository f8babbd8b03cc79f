//! Term generators: the three benchmark families with their expected
//! normal forms, random well-typed terms, random valuations, and random
//! pattern sets for matcher testing.

use std::collections::HashMap;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::denote::Value;
use crate::expr::{Expr, Var, VarId};
use crate::ident::Ident;
use crate::pattern::Pattern;
use crate::typing::TypeEnv;
use crate::types::{BaseKind, ObjType};

/// A generated term with the types of its free variables.
#[derive(Clone, Debug)]
pub struct Generated {
    pub expr: Expr,
    pub free: Vec<(Var, ObjType)>,
}

impl Generated {
    pub fn type_env(&self) -> TypeEnv {
        self.free.iter().map(|(v, t)| (v.id, t.clone())).collect()
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    Expr::binop(Ident::Add, a, b)
}

fn plus_zeros(x: &Var, m: usize) -> Expr {
    (0..m).fold(Expr::var(x), |e, _| add(e, Expr::int(0)))
}

fn tree(n: usize, leaf: &dyn Fn() -> Expr) -> Expr {
    if n == 0 {
        leaf()
    } else {
        add(tree(n - 1, leaf), tree(n - 1, leaf))
    }
}

/// Balanced `+` tree of depth `n` whose leaves are `x` plus `m` zeros.
pub fn gen_plus0tree(n: usize, m: usize) -> Generated {
    let x = Var::fresh("x");
    let expr = tree(n, &|| plus_zeros(&x, m));
    Generated { expr, free: vec![(x, ObjType::INT)] }
}

/// The zero-free tree over the given variable.
pub fn plus0tree_normal_form(n: usize, x: &Var) -> Expr {
    tree(n, &|| Expr::var(x))
}

/// `let v1 = x + 0 in let v2 = v1 + 0 in ... vn`
pub fn gen_underlets_plus0(n: usize) -> Generated {
    assert!(n >= 1);
    let x = Var::fresh("x");
    let vs: Vec<Var> = (1..=n).map(|i| Var::fresh(format!("v{i}"))).collect();
    let mut body = Expr::var(&vs[n - 1]);
    for i in (0..n).rev() {
        let prev = if i == 0 { Expr::var(&x) } else { Expr::var(&vs[i - 1]) };
        body = Expr::let_in(vs[i].clone(), add(prev, Expr::int(0)), body);
    }
    Generated { expr: body, free: vec![(x, ObjType::INT)] }
}

fn int_list(items: Vec<Expr>) -> Expr {
    items
        .into_iter()
        .rev()
        .fold(Expr::ident(Ident::Nil(BaseKind::Int)), |t, h| Expr::apps(Expr::ident(Ident::Cons(BaseKind::Int)), [h, t]))
}

fn list_rect_int(nil: Expr, step: Expr, l: Expr) -> Expr {
    Expr::apps(Expr::ident(Ident::ListRect(BaseKind::Int, ObjType::list(BaseKind::Int))), [nil, step, l])
}

fn lam3(names: [&str; 3], tys: [ObjType; 3], body: impl FnOnce(&Var, &Var, &Var) -> Expr) -> Expr {
    let [a, b, c] = names.map(Var::fresh);
    let inner = body(&a, &b, &c);
    let [ta, tb, tc] = tys;
    Expr::abs(a, ta, Expr::abs(b, tb, Expr::abs(c, tc, inner)))
}

/// `make n m v`: `m` rounds of `map_dbl` starting from `n` copies of `v`,
/// where `map_dbl = \l. list_rect [] (\h t r. let y = h + h in y :: r) l`.
pub fn gen_liftlets_map(n: usize, m: usize, v: &Var) -> Expr {
    let il = ObjType::list(BaseKind::Int);
    let step = lam3(["h", "t", "r"], [ObjType::INT, il.clone(), il.clone()], |h, _, r| {
        let y = Var::fresh("y");
        Expr::let_in(
            y.clone(),
            add(Expr::var(h), Expr::var(h)),
            Expr::apps(Expr::ident(Ident::Cons(BaseKind::Int)), [Expr::var(&y), Expr::var(r)]),
        )
    });
    let l = Var::fresh("l");
    let map_dbl = Expr::abs(
        l.clone(),
        il.clone(),
        list_rect_int(Expr::ident(Ident::Nil(BaseKind::Int)), step, Expr::var(&l)),
    );
    let (k, acc) = (Var::fresh("k"), Var::fresh("acc"));
    let succ = Expr::abs(k, ObjType::INT, Expr::abs(acc.clone(), il.clone(), Expr::app(map_dbl, Expr::var(&acc))));
    Expr::apps(
        Expr::ident(Ident::NatRect(il)),
        [int_list(vec![Expr::var(v); n]), succ, Expr::int(m as i128)],
    )
}

pub fn gen_liftlets(n: usize, m: usize) -> Generated {
    let v = Var::fresh("v");
    Generated { expr: gen_liftlets_map(n, m, &v), free: vec![(v, ObjType::INT)] }
}

/// `list_rect [] (\h t r. h :: r) e`: a consumer that forces the list
/// spine, so lets produced inside `e` must be lifted past it.
pub fn copy_goal(e: Expr) -> Expr {
    let il = ObjType::list(BaseKind::Int);
    let step = lam3(["h", "t", "r"], [ObjType::INT, il.clone(), il], |h, _, r| {
        Expr::apps(Expr::ident(Ident::Cons(BaseKind::Int)), [Expr::var(h), Expr::var(r)])
    });
    list_rect_int(Expr::ident(Ident::Nil(BaseKind::Int)), step, e)
}

/// `m` rounds of `n` let-bound doublings, innermost element first in each
/// round, ending in the last round's list.
pub fn liftlets_normal_form(n: usize, m: usize, v: &Var) -> Expr {
    let mut binds: Vec<(Var, Expr)> = Vec::new();
    let mut cur: Vec<Expr> = vec![Expr::var(v); n];
    for _ in 0..m {
        let mut next = vec![Expr::int(0); n];
        for i in (0..n).rev() {
            let y = Var::fresh("y");
            binds.push((y.clone(), add(cur[i].clone(), cur[i].clone())));
            next[i] = Expr::var(&y);
        }
        cur = next;
    }
    binds.into_iter().rev().fold(int_list(cur), |b, (y, r)| Expr::let_in(y, r, b))
}

/// One valuation per free variable: integers from a mix of small values
/// and values near word boundaries.
pub fn random_valuation(free: &[(Var, ObjType)], rng: &mut impl Rng) -> HashMap<VarId, Value> {
    free.iter().filter(|(_, t)| *t == ObjType::INT).map(|(v, _)| (v.id, Value::int(random_int(rng)))).collect()
}

fn random_int(rng: &mut impl Rng) -> BigInt {
    match rng.gen_range(0..10) {
        0 => BigInt::from(u64::MAX) - rng.gen_range(0..4u64),
        1 => BigInt::from(rng.gen::<i64>()),
        _ => BigInt::from(rng.gen_range(-1000..=1000i64)),
    }
}

/// Valuation inside half-open bounds.
pub fn random_in_bounds(bounds: &[(Var, BigInt, BigInt)], rng: &mut impl Rng) -> HashMap<VarId, Value> {
    use num_bigint::RandBigInt;
    bounds.iter().map(|(v, lo, hi)| (v.id, Value::int(rng.gen_bigint_range(lo, hi)))).collect()
}

/// Random well-typed integer terms over free integer variables. Division
/// is only by positive literals and `nat_rect` counts are small literals,
/// so every generated term has a defined value under every valuation.
pub struct TermGen<'g, R: Rng> {
    pub rng: &'g mut R,
    pub free: Vec<Var>,
    scope: Vec<(Var, ObjType)>,
}

fn int_to_int() -> ObjType {
    ObjType::arrow(ObjType::INT, ObjType::INT)
}

impl<'g, R: Rng> TermGen<'g, R> {
    pub fn new(rng: &'g mut R, num_free: usize) -> Self {
        let free: Vec<Var> = (0..num_free).map(|i| Var::fresh(format!("x{i}"))).collect();
        let scope = free.iter().map(|v| (v.clone(), ObjType::INT)).collect();
        TermGen { rng, free, scope }
    }

    pub fn generate(&mut self, depth: usize) -> Generated {
        let expr = self.int(depth);
        Generated { expr, free: self.free.iter().map(|v| (v.clone(), ObjType::INT)).collect() }
    }

    fn pick_var(&mut self, t: &ObjType) -> Option<Expr> {
        let vs: Vec<&Var> = self.scope.iter().filter(|(_, u)| u == t).map(|(v, _)| v).collect();
        vs.choose(self.rng).map(|v| Expr::var(v))
    }

    fn bind<T>(&mut self, v: &Var, t: ObjType, f: impl FnOnce(&mut Self) -> T) -> T {
        self.scope.push((v.clone(), t));
        let out = f(self);
        self.scope.pop();
        out
    }

    fn lit(&mut self) -> Expr {
        let n = match self.rng.gen_range(0..4) {
            0 => 0,
            1 => 1,
            _ => self.rng.gen_range(-8..=20),
        };
        Expr::int(n)
    }

    pub fn int(&mut self, depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_ratio(1, 6) {
            return match self.rng.gen_range(0..3) {
                0 => self.lit(),
                _ => self.pick_var(&ObjType::INT).unwrap_or_else(|| self.lit()),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..13) {
            0..=2 => {
                let op = [Ident::Add, Ident::Sub, Ident::Mul].choose(self.rng).unwrap().clone();
                let (a, b) = (self.int(d), self.int(d));
                Expr::binop(op, a, b)
            }
            3 => {
                let a = self.int(d);
                let k = *[1, 2, 3, 4, 6, 8, 16].choose(self.rng).unwrap();
                Expr::binop(Ident::Div, a, Expr::int(k))
            }
            4 => {
                let a = self.int(d);
                let k = self.rng.gen_range(0..5);
                Expr::binop(Ident::Shr, a, Expr::int(k))
            }
            5 => {
                let (t, rhs) = self.any_value(d);
                let v = Var::fresh("z");
                let body = self.bind(&v, t, |g| g.int(d));
                Expr::let_in(v, rhs, body)
            }
            6 => {
                let f = self.int_fn(d);
                let a = self.int(d);
                Expr::app(f, a)
            }
            7 => {
                let l = self.int_list(d);
                let nil = self.int(d);
                let step = self.list_step(d);
                Expr::apps(Expr::ident(Ident::ListRect(BaseKind::Int, ObjType::INT)), [nil, step, l])
            }
            8 => {
                let z = self.int(d);
                let (k, acc) = (Var::fresh("k"), Var::fresh("acc"));
                let body = self.bind(&k, ObjType::INT, |g| g.bind(&acc, ObjType::INT, |g| g.int(d)));
                let s = Expr::abs(k, ObjType::INT, Expr::abs(acc, ObjType::INT, body));
                let count = Expr::int(self.rng.gen_range(0..4));
                Expr::apps(Expr::ident(Ident::NatRect(ObjType::INT)), [z, s, count])
            }
            9 => {
                let p = self.pair(d);
                let proj = if self.rng.gen() { Ident::Fst(BaseKind::Int, BaseKind::Int) } else { Ident::Snd(BaseKind::Int, BaseKind::Int) };
                Expr::app(Expr::ident(proj), p)
            }
            10 => {
                let lo = self.rng.gen_range(-10..10);
                let hi = lo + self.rng.gen_range(1..40);
                let a = self.int(d);
                Expr::apps(Expr::ident(Ident::Clip), [Expr::int(lo), Expr::int(hi), a])
            }
            11 => {
                let a = self.int(d);
                let t = ObjType::INT;
                Expr::app(Expr::ident(Ident::Comment("note".into(), t)), a)
            }
            _ => {
                let f = self.pick_var(&int_to_int());
                match f {
                    Some(f) => {
                        let a = self.int(d);
                        Expr::app(f, a)
                    }
                    None => self.int(d),
                }
            }
        }
    }

    fn any_value(&mut self, d: usize) -> (ObjType, Expr) {
        match self.rng.gen_range(0..5) {
            0 => (ObjType::list(BaseKind::Int), self.int_list(d)),
            1 => (int_to_int(), self.int_fn(d)),
            2 => (ObjType::pair(BaseKind::Int, BaseKind::Int), self.pair(d)),
            _ => (ObjType::INT, self.int(d)),
        }
    }

    fn int_fn(&mut self, d: usize) -> Expr {
        if self.rng.gen_ratio(1, 4) {
            if let Some(f) = self.pick_var(&int_to_int()) {
                return f;
            }
        }
        let v = Var::fresh("p");
        let body = self.bind(&v, ObjType::INT, |g| g.int(d));
        Expr::abs(v, ObjType::INT, body)
    }

    fn int_list(&mut self, d: usize) -> Expr {
        let t = ObjType::list(BaseKind::Int);
        if self.rng.gen_ratio(1, 4) {
            if let Some(l) = self.pick_var(&t) {
                return l;
            }
        }
        let len = self.rng.gen_range(0..4);
        let items = (0..len).map(|_| self.int(d.saturating_sub(1))).collect();
        int_list(items)
    }

    fn list_step(&mut self, d: usize) -> Expr {
        let il = ObjType::list(BaseKind::Int);
        let [h, t, r] = ["h", "t", "r"].map(Var::fresh);
        let body = self.bind(&h, ObjType::INT, |g| {
            g.bind(&t, il.clone(), |g| g.bind(&r, ObjType::INT, |g| g.int(d)))
        });
        Expr::abs(h, ObjType::INT, Expr::abs(t, il, Expr::abs(r, ObjType::INT, body)))
    }

    fn pair(&mut self, d: usize) -> Expr {
        let t = ObjType::pair(BaseKind::Int, BaseKind::Int);
        if self.rng.gen_ratio(1, 4) {
            if let Some(p) = self.pick_var(&t) {
                return p;
            }
        }
        let (a, b) = (self.int(d), self.int(d));
        if self.rng.gen_ratio(1, 3) {
            Expr::apps(Expr::ident(Ident::AddWithCarry64), [a, b])
        } else {
            Expr::binop(Ident::PairMk(BaseKind::Int, BaseKind::Int), a, b)
        }
    }
}

/// A random pattern set (priority order) and a term built to hit some of
/// them. Shapes only: the matcher does not consult types.
pub fn random_pattern_case(rng: &mut impl Rng, max_rules: usize, max_depth: usize) -> (Vec<Pattern>, Expr) {
    let k = rng.gen_range(1..=max_rules);
    let pats: Vec<Pattern> = (0..k)
        .map(|_| loop {
            let p = random_pattern(rng, max_depth);
            if !p.is_wildcard() {
                break p;
            }
        })
        .collect();
    let e = if rng.gen_ratio(3, 4) {
        let p = pats.choose(rng).unwrap();
        instantiate(p, rng, max_depth)
    } else {
        random_shape(rng, max_depth)
    };
    (pats, e)
}

const ALPHABET: [fn() -> Ident; 5] =
    [|| Ident::Add, || Ident::Mul, || Ident::IntLit(0), || Ident::IntLit(1), || Ident::Nil(BaseKind::Int)];

fn random_ident(rng: &mut impl Rng) -> Ident {
    ALPHABET.choose(rng).unwrap()()
}

fn random_pattern(rng: &mut impl Rng, depth: usize) -> Pattern {
    if depth <= 1 || rng.gen_ratio(1, 3) {
        return match rng.gen_range(0..4) {
            0 => Pattern::Wildcard(Var::fresh("w")),
            1 => Pattern::ConstWildcard(Var::fresh("c")),
            _ => Pattern::Ident(random_ident(rng)),
        };
    }
    Pattern::app(random_pattern(rng, depth - 1), random_pattern(rng, depth - 1))
}

fn random_shape(rng: &mut impl Rng, depth: usize) -> Expr {
    if depth <= 1 || rng.gen_ratio(1, 3) {
        return match rng.gen_range(0..4) {
            0 => Expr::var(&Var::fresh("q")),
            _ => Expr::ident(random_ident(rng)),
        };
    }
    Expr::app(random_shape(rng, depth - 1), random_shape(rng, depth - 1))
}

fn instantiate(p: &Pattern, rng: &mut impl Rng, depth: usize) -> Expr {
    match p {
        Pattern::Wildcard(_) => random_shape(rng, depth.min(3)),
        Pattern::ConstWildcard(_) => {
            if rng.gen_ratio(4, 5) {
                Expr::int(rng.gen_range(0..3))
            } else {
                random_shape(rng, 2)
            }
        }
        Pattern::Ident(i) => Expr::ident(i.clone()),
        Pattern::App(f, a) => Expr::app(instantiate(f, rng, depth), instantiate(a, rng, depth)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denote::denote;
    use crate::expr::{alpha_eq, term_stats};
    use crate::syntax::print_expr;
    use crate::typing::type_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plus0tree_shapes() {
        let g = gen_plus0tree(0, 1);
        assert_eq!(print_expr(&g.expr), "x + 0");
        let g = gen_plus0tree(1, 2);
        assert_eq!(print_expr(&g.expr), "x + 0 + 0 + (x + 0 + 0)");
        for n in 0..5 {
            for m in 0..5 {
                let g = gen_plus0tree(n, m);
                let p = 1usize << n;
                assert_eq!(term_stats(&g.expr).node_count, p * (2 * m + 1) + p - 1);
            }
        }
    }

    #[test]
    fn underlets_shape() {
        let g = gen_underlets_plus0(3);
        assert_eq!(print_expr(&g.expr), "let v1 = x + 0 in let v2 = v1 + 0 in let v3 = v2 + 0 in v3");
        assert_eq!(term_stats(&gen_underlets_plus0(40).expr).let_count, 40);
    }

    #[test]
    fn liftlets_is_well_typed_and_matches_its_normal_form() {
        for (n, m) in [(1, 0), (1, 1), (2, 3), (3, 2)] {
            let g = gen_liftlets(n, m);
            let env = g.type_env();
            assert_eq!(type_check(&g.expr, &env).unwrap(), ObjType::list(BaseKind::Int));
            assert_eq!(type_check(&copy_goal(g.expr.clone()), &env).unwrap(), ObjType::list(BaseKind::Int));
            let v = &g.free[0].0;
            let nf = liftlets_normal_form(n, m, v);
            assert_eq!(term_stats(&nf).let_count, n * m);
            let rho = HashMap::from([(v.id, Value::int(7))]);
            assert_eq!(denote(&g.expr, &rho).unwrap(), denote(&nf, &rho).unwrap());
        }
        let v = Var::fresh("v");
        assert_eq!(print_expr(&liftlets_normal_form(1, 0, &v)), "[v]");
        assert_eq!(print_expr(&liftlets_normal_form(1, 1, &v)), "let y = v + v in [y]");
        assert!(alpha_eq(&liftlets_normal_form(2, 0, &v), &int_list(vec![Expr::var(&v), Expr::var(&v)])));
    }

    #[test]
    fn random_terms_are_well_typed_and_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let g = TermGen::new(&mut rng, 3).generate(5);
            let env = g.type_env();
            assert_eq!(type_check(&g.expr, &env).unwrap(), ObjType::INT, "{}", print_expr(&g.expr));
            let rho = random_valuation(&g.free, &mut rng);
            denote(&g.expr, &rho).unwrap();
        }
    }
}
