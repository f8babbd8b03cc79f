use std::collections::HashMap;

use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rwpe::baseline::{rule_counts, Baseline, BaselineError, Builtins, Order, LET_INLINE};
use rwpe::bounds::{analyze, BoundsEnv, Interval, Range};
use rwpe::denote::{denote, Value};
use rwpe::engine::{rewrite_top, EngineConfig};
use rwpe::expr::{alpha_eq, has_unique_binders, refresh_binders, term_stats, Expr, ExprKind, Var};
use rwpe::gen::{self, random_in_bounds, random_valuation, Generated, TermGen};
use rwpe::pattern::{compile_patterns, eval_decision_tree, match_pattern, Pattern};
use rwpe::side_cond::{eval_cond, CondExpr, CondOp, CondValue};
use rwpe::stdlib;
use rwpe::syntax::{parse_term_in, print_expr_with, PrintOptions, Scope};
use rwpe::typing::type_check;
use rwpe::{BaseKind, Ident, ObjType};

fn random_term(seed: u64, depth: usize) -> (Generated, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = TermGen::new(&mut rng, 3).generate(depth);
    (g, rng)
}

fn fits(v: &Value, t: &ObjType) -> bool {
    match (v, t) {
        (Value::Fun(_), ObjType::Arrow(..)) => true,
        (_, ObjType::Base(k)) => fits_base(v, k),
        _ => false,
    }
}

fn fits_base(v: &Value, k: &BaseKind) -> bool {
    match (v, k) {
        (Value::Int(_), BaseKind::Int) | (Value::Bool(_), BaseKind::Bool) | (Value::Unit, BaseKind::Unit) => true,
        (Value::List(xs), BaseKind::List(e)) => xs.iter().all(|x| fits_base(x, e)),
        (Value::Pair(p), BaseKind::Pair(a, b)) => fits_base(&p.0, a) && fits_base(&p.1, b),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn denote_matches_type_and_is_deterministic(seed in any::<u64>()) {
        let (g, mut rng) = random_term(seed, 5);
        let t = type_check(&g.expr, &g.type_env()).unwrap();
        let rho = random_valuation(&g.free, &mut rng);
        let a = denote(&g.expr, &rho).unwrap();
        prop_assert!(fits(&a, &t));
        prop_assert_eq!(a, denote(&g.expr, &rho).unwrap());
    }

    #[test]
    fn alpha_eq_is_an_equivalence_respecting_denote(seed in any::<u64>()) {
        let (g, mut rng) = random_term(seed, 4);
        let (r1, r2) = (refresh_binders(&g.expr), refresh_binders(&g.expr));
        prop_assert!(alpha_eq(&g.expr, &g.expr));
        prop_assert!(alpha_eq(&g.expr, &r1) && alpha_eq(&r1, &g.expr));
        prop_assert!(alpha_eq(&r1, &r2) && alpha_eq(&g.expr, &r2));
        let rho = random_valuation(&g.free, &mut rng);
        prop_assert_eq!(denote(&g.expr, &rho).unwrap(), denote(&r1, &rho).unwrap());
    }

    #[test]
    fn rewriting_preserves_meaning_type_and_hygiene(seed in any::<u64>(), inline in any::<bool>()) {
        let (g, mut rng) = random_term(seed, 5);
        let env = g.type_env();
        let cfg = EngineConfig { inline_constants: inline, inline_variables: inline, ..EngineConfig::default() };
        let (out, _) = rewrite_top(&g.expr, &env, &stdlib::standard(), &cfg).unwrap();
        prop_assert_eq!(type_check(&out, &env).unwrap(), type_check(&g.expr, &env).unwrap());
        prop_assert!(has_unique_binders(&out));
        for _ in 0..5 {
            let rho = random_valuation(&g.free, &mut rng);
            prop_assert_eq!(denote(&g.expr, &rho).unwrap(), denote(&out, &rho).unwrap());
        }
    }

    #[test]
    fn printed_terms_parse_back(seed in any::<u64>()) {
        let (g, _) = random_term(seed, 5);
        let (out, _) = rewrite_top(&g.expr, &g.type_env(), &stdlib::standard(), &EngineConfig::default()).unwrap();
        for e in [&g.expr, &out] {
            let opts = PrintOptions { free_types: g.type_env(), ..PrintOptions::default() };
            let p = print_expr_with(e, &opts);
            let mut scope = Scope::new();
            for (v, name) in &p.free_names {
                scope.vars.insert(name.clone(), (v.clone(), Some(ObjType::INT)));
            }
            let back = parse_term_in(&p.text, &scope).unwrap();
            prop_assert!(alpha_eq(&back.expr, e), "{}", p.text);
        }
    }

    #[test]
    fn naive_engines_agree_with_nbe_and_replay(seed in any::<u64>(), bottomup in any::<bool>()) {
        let (g, mut rng) = random_term(seed, 4);
        let rules = stdlib::standard();
        let order = if bottomup { Order::Bottomup } else { Order::Topdown };
        let b = Baseline::new(&rules, Builtins::ALL, order);
        let (naive, trace) = match b.rewrite_exhaustive(&g.expr, 200_000) {
            Ok(r) => r,
            Err(BaselineError::StepBudgetExhausted { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        prop_assert!(alpha_eq(&b.replay(&g.expr, &trace).unwrap(), &naive));
        let (fast, _) = rewrite_top(&g.expr, &g.type_env(), &rules, &EngineConfig::default()).unwrap();
        for _ in 0..5 {
            let rho = random_valuation(&g.free, &mut rng);
            prop_assert_eq!(denote(&naive, &rho).unwrap(), denote(&fast, &rho).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn decision_tree_agrees_with_first_match(seed in any::<u64>(), reject_mask in any::<u8>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pats, e) = gen::random_pattern_case(&mut rng, 6, 5);
        let refs: Vec<&Pattern> = pats.iter().collect();
        let compiled = compile_patterns(&refs).unwrap();
        prop_assert_eq!(&compiled, &compile_patterns(&refs).unwrap());
        // a rejected rule behaves like a false side condition
        let accepts = |k: usize| reject_mask & (1 << k) == 0;
        let tree = eval_decision_tree(&compiled, &e, |k, b| Ok(accepts(k).then(|| (k, b.clone())))).unwrap();
        let naive = pats.iter().enumerate().filter(|(k, _)| accepts(*k)).find_map(|(k, p)| match_pattern(p, &e).map(|b| (k, b)));
        match (tree, naive) {
            (None, None) => {}
            (Some((i, bi)), Some((j, bj))) => {
                prop_assert_eq!(i, j);
                prop_assert_eq!(bi.len(), bj.len());
                for (v, x) in &bi {
                    prop_assert!(alpha_eq(x, &bj[v]));
                }
            }
            (t, n) => prop_assert!(false, "tree {:?} naive {:?}", t.map(|p| p.0), n.map(|p| p.0)),
        }
    }

    #[test]
    fn conditions_are_total_and_pure(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vars: Vec<(Var, i64)> = (0..3).map(|i| (Var::fresh(format!("c{i}")), rng.gen_range(-70..70))).collect();
        let c = random_cond(&mut rng, &vars, 4, true);
        let lookup = |v: &Var| {
            let n = vars.iter().find(|(w, _)| w == v).unwrap().1;
            Ok(CondValue::Int(BigInt::from(n)))
        };
        let a = eval_cond(&c, &lookup).unwrap();
        prop_assert!(!matches!(a, Some(CondValue::Int(_))));
        prop_assert_eq!(a, eval_cond(&c, &lookup).unwrap());
    }
}

fn random_cond(rng: &mut ChaCha8Rng, vars: &[(Var, i64)], depth: usize, boolean: bool) -> CondExpr {
    let d = depth.saturating_sub(1);
    if boolean {
        match if depth == 0 { 0 } else { rng.gen_range(0..5) } {
            0 => CondExpr::Bool(rng.gen()),
            1 => CondExpr::Not(Box::new(random_cond(rng, vars, d, true))),
            2 => {
                let op = [CondOp::And, CondOp::Or][rng.gen_range(0..2)];
                CondExpr::bin(op, random_cond(rng, vars, d, true), random_cond(rng, vars, d, true))
            }
            _ => {
                let ops = [CondOp::Eq, CondOp::Ne, CondOp::Lt, CondOp::Le, CondOp::Gt, CondOp::Ge];
                let op = ops[rng.gen_range(0..ops.len())];
                CondExpr::bin(op, random_cond(rng, vars, d, false), random_cond(rng, vars, d, false))
            }
        }
    } else {
        match if depth == 0 { rng.gen_range(0..2) } else { rng.gen_range(0..5) } {
            0 => CondExpr::Int(BigInt::from(rng.gen_range(-10..70))),
            1 => CondExpr::Var(vars[rng.gen_range(0..vars.len())].0.clone()),
            2 => CondExpr::Log2(Box::new(random_cond(rng, vars, d, false))),
            _ => {
                let ops = [CondOp::Add, CondOp::Sub, CondOp::Mul, CondOp::Pow];
                let op = ops[rng.gen_range(0..ops.len())];
                CondExpr::bin(op, random_cond(rng, vars, d, false), random_cond(rng, vars, d, false))
            }
        }
    }
}

/// Straightline code over three bounded inputs. Returns the let chain and
/// the bound variables in order.
fn straightline(rng: &mut ChaCha8Rng, inputs: &[Var], len: usize) -> (Vec<(Var, Expr)>, Expr) {
    let mut atoms: Vec<Var> = inputs.to_vec();
    let mut lets = Vec::new();
    for i in 0..len {
        let atom = |rng: &mut ChaCha8Rng| {
            if rng.gen_ratio(1, 5) {
                Expr::int(rng.gen_range(-3..20))
            } else {
                Expr::var(&atoms[rng.gen_range(0..atoms.len())])
            }
        };
        let (x, y) = (atom(rng), atom(rng));
        let rhs = match rng.gen_range(0..8) {
            0 | 1 => Expr::binop(Ident::Add, x, y),
            2 => Expr::binop(Ident::Sub, x, y),
            3 => Expr::binop(Ident::Mul, x, y),
            4 => Expr::binop(Ident::Shr, x, Expr::int(rng.gen_range(0..6))),
            5 => Expr::binop(Ident::Div, x, Expr::int(rng.gen_range(1..9))),
            6 => {
                let lo = rng.gen_range(-20..20);
                Expr::apps(Expr::ident(Ident::Clip), [Expr::int(lo), Expr::int(lo + rng.gen_range(1..100)), x])
            }
            _ => {
                let proj = if rng.gen() { Ident::Fst(BaseKind::Int, BaseKind::Int) } else { Ident::Snd(BaseKind::Int, BaseKind::Int) };
                Expr::app(Expr::ident(proj), Expr::apps(Expr::ident(Ident::AddWithCarry64), [x, y]))
            }
        };
        let v = Var::fresh(format!("t{i}"));
        atoms.push(v.clone());
        lets.push((v, rhs));
    }
    let body = Expr::var(&lets.last().unwrap().0);
    (lets, body)
}

fn chain(lets: &[(Var, Expr)], body: Expr) -> Expr {
    lets.iter().rev().fold(body, |b, (v, r)| Expr::let_in(v.clone(), r.clone(), b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn inferred_intervals_are_sound_and_clipping_is_transparent(seed in any::<u64>(), len in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Var> = ["a", "b", "c"].iter().map(|n| Var::fresh(*n)).collect();
        let bounds: Vec<(Var, BigInt, BigInt)> = inputs
            .iter()
            .map(|v| {
                let lo: i64 = rng.gen_range(-100..100);
                let width: BigInt = BigInt::from(1) << rng.gen_range(0..70);
                (v.clone(), BigInt::from(lo), lo + width)
            })
            .collect();
        let env: BoundsEnv = bounds
            .iter()
            .map(|(v, lo, hi)| (v.id, Range::Known(Interval::new(lo.clone(), hi.clone()).unwrap())))
            .collect();
        let (lets, body) = straightline(&mut rng, &inputs, len);
        let prog = chain(&lets, body);
        let an = analyze(&prog, &env).unwrap();
        for _ in 0..20 {
            let rho = random_in_bounds(&bounds, &mut rng);
            for (i, (v, range)) in an.let_ranges.iter().enumerate() {
                let val = denote(&chain(&lets[..=i], Expr::var(v)), &rho).unwrap();
                prop_assert!(range.admits(&val), "{} = {:?} outside {:?}", v.name, val, range);
            }
            prop_assert_eq!(denote(&prog, &rho).unwrap(), denote(&an.clipped, &rho).unwrap());
        }
        // every clip the analysis wrote has literal bounds
        let mut stack = vec![an.clipped.clone()];
        while let Some(e) = stack.pop() {
            let (h, args) = e.spine();
            if h.as_ident() == Some(&Ident::Clip) && args.len() == 3 {
                prop_assert!(args[0].as_int().is_some() && args[1].as_int().is_some());
            }
            match e.kind() {
                ExprKind::App(f, a) => { stack.push(f.clone()); stack.push(a.clone()); }
                ExprKind::LetIn(_, r, b) => { stack.push(r.clone()); stack.push(b.clone()); }
                ExprKind::Abs(_, _, b) => stack.push(b.clone()),
                _ => {}
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn underlets_sharing_and_naive_counts(n in 1usize..=50) {
        let g = gen::gen_underlets_plus0(n);
        let rules = stdlib::load(stdlib::ADD_ZERO);
        let cfg = EngineConfig { inline_constants: false, inline_variables: false, ..EngineConfig::default() };
        let (out, _) = rewrite_top(&g.expr, &g.type_env(), &rules, &cfg).unwrap();
        prop_assert_eq!(term_stats(&out).let_count, n);
        let (out, trace) = Baseline::new(&rules, Builtins::ALL, Order::Topdown).rewrite_exhaustive(&g.expr, 10_000).unwrap();
        let counts = rule_counts(&trace);
        prop_assert_eq!(counts["add_zero"], n as u64);
        prop_assert_eq!(counts[LET_INLINE], n as u64);
        prop_assert!(alpha_eq(&out, &Expr::var(&g.free[0].0)));
    }

    #[test]
    fn liftlets_normal_form_and_let_count(n in 1usize..=8, m in 0usize..=8) {
        let g = gen::gen_liftlets(n, m);
        let (out, _) = rewrite_top(&g.expr, &g.type_env(), &stdlib::standard(), &EngineConfig::default()).unwrap();
        prop_assert!(alpha_eq(&out, &gen::liftlets_normal_form(n, m, &g.free[0].0)));
        prop_assert_eq!(term_stats(&out).let_count, n * m);
        let rho: HashMap<_, _> = [(g.free[0].0.id, Value::int(3))].into();
        prop_assert_eq!(denote(&out, &rho).unwrap(), denote(&g.expr, &rho).unwrap());
    }
}
