//! Executable side conditions over constant pattern variables, and rule
//! well-formedness checking.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::denote::log2_floor;
use crate::expr::{free_vars, Expr, Var, VarId};
use crate::ident::Ident;
use crate::pattern::{is_constant, Bindings, Pattern, RewriteRule};
use crate::typing::{type_check, TypeEnv};
use crate::types::ObjType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CondOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Pow,
}

impl CondOp {
    fn symbol(self) -> &'static str {
        match self {
            CondOp::Or => "||",
            CondOp::And => "&&",
            CondOp::Eq => "==",
            CondOp::Ne => "!=",
            CondOp::Lt => "<",
            CondOp::Le => "<=",
            CondOp::Gt => ">",
            CondOp::Ge => ">=",
            CondOp::Add => "+",
            CondOp::Sub => "-",
            CondOp::Mul => "*",
            CondOp::Pow => "^",
        }
    }

    fn prec(self) -> u8 {
        match self {
            CondOp::Or => 1,
            CondOp::And => 2,
            CondOp::Eq | CondOp::Ne | CondOp::Lt | CondOp::Le | CondOp::Gt | CondOp::Ge => 4,
            CondOp::Add | CondOp::Sub => 5,
            CondOp::Mul => 6,
            CondOp::Pow => 7,
        }
    }

    fn is_comparison(self) -> bool {
        self.prec() == 4
    }
}

/// Boolean/integer expression over rule variables.
#[derive(Clone, Debug)]
pub enum CondExpr {
    Int(BigInt),
    Bool(bool),
    Var(Var),
    Not(Box<CondExpr>),
    Log2(Box<CondExpr>),
    Bin(CondOp, Box<CondExpr>, Box<CondExpr>),
}

pub type SideCond = CondExpr;

impl CondExpr {
    pub fn bin(op: CondOp, l: CondExpr, r: CondExpr) -> Self {
        CondExpr::Bin(op, Box::new(l), Box::new(r))
    }

    /// Variables in first-occurrence order, without repeats.
    pub fn vars(&self) -> Vec<Var> {
        fn go(c: &CondExpr, out: &mut Vec<Var>) {
            match c {
                CondExpr::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone())
                    }
                }
                CondExpr::Int(_) | CondExpr::Bool(_) => {}
                CondExpr::Not(a) | CondExpr::Log2(a) => go(a, out),
                CondExpr::Bin(_, a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Structural equality after mapping variables through `rename`.
    pub fn equiv(&self, other: &CondExpr, rename: &HashMap<VarId, VarId>) -> bool {
        match (self, other) {
            (CondExpr::Int(a), CondExpr::Int(b)) => a == b,
            (CondExpr::Bool(a), CondExpr::Bool(b)) => a == b,
            (CondExpr::Var(a), CondExpr::Var(b)) => rename.get(&a.id).copied().unwrap_or(a.id) == b.id,
            (CondExpr::Not(a), CondExpr::Not(b)) | (CondExpr::Log2(a), CondExpr::Log2(b)) => a.equiv(b, rename),
            (CondExpr::Bin(o1, a1, b1), CondExpr::Bin(o2, a2, b2)) => {
                o1 == o2 && a1.equiv(a2, rename) && b1.equiv(b2, rename)
            }
            _ => false,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        match self {
            CondExpr::Int(n) => write!(f, "{n}"),
            CondExpr::Bool(b) => write!(f, "{b}"),
            CondExpr::Var(v) => write!(f, "{}", v.name),
            CondExpr::Log2(a) => {
                f.write_str("log2floor ")?;
                a.fmt_prec(f, 8)
            }
            CondExpr::Not(a) => {
                let paren = min > 3;
                if paren {
                    f.write_str("(")?;
                }
                f.write_str("not ")?;
                a.fmt_prec(f, 3)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            CondExpr::Bin(op, a, b) => {
                let p = op.prec();
                let paren = min > p;
                if paren {
                    f.write_str("(")?;
                }
                let (lp, rp) = if op.is_comparison() {
                    (p + 1, p + 1)
                } else if *op == CondOp::Pow {
                    (p + 1, p)
                } else {
                    (p, p + 1)
                };
                a.fmt_prec(f, lp)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, rp)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for CondExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CondValue {
    Int(BigInt),
    Bool(bool),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CondError {
    #[error("condition variable `{0}` is bound to a non-constant term")]
    NonConstantBinding(String),
    #[error("condition variable `{0}` is unbound")]
    UnboundVariable(String),
    #[error("ill-typed condition: {0}")]
    IllTyped(String),
}

const MAX_EXPONENT: u32 = 1 << 16;

/// Evaluates `c`. `Ok(None)` means the value is undefined (logarithm of a
/// nonpositive number or an unusable exponent); callers treat that as false.
pub fn eval_cond(
    c: &CondExpr,
    lookup: &dyn Fn(&Var) -> Result<CondValue, CondError>,
) -> Result<Option<CondValue>, CondError> {
    fn int(v: Option<CondValue>) -> Result<Option<BigInt>, CondError> {
        match v {
            None => Ok(None),
            Some(CondValue::Int(n)) => Ok(Some(n)),
            Some(CondValue::Bool(_)) => Err(CondError::IllTyped("expected integer".into())),
        }
    }
    fn boolean(v: Option<CondValue>) -> Result<Option<bool>, CondError> {
        match v {
            None => Ok(None),
            Some(CondValue::Bool(b)) => Ok(Some(b)),
            Some(CondValue::Int(_)) => Err(CondError::IllTyped("expected boolean".into())),
        }
    }
    Ok(match c {
        CondExpr::Int(n) => Some(CondValue::Int(n.clone())),
        CondExpr::Bool(b) => Some(CondValue::Bool(*b)),
        CondExpr::Var(v) => Some(lookup(v)?),
        CondExpr::Not(a) => boolean(eval_cond(a, lookup)?)?.map(|b| CondValue::Bool(!b)),
        CondExpr::Log2(a) => int(eval_cond(a, lookup)?)?.and_then(|n| log2_floor(&n)).map(CondValue::Int),
        CondExpr::Bin(op @ (CondOp::And | CondOp::Or), a, b) => {
            let Some(l) = boolean(eval_cond(a, lookup)?)? else { return Ok(None) };
            match (op, l) {
                (CondOp::And, false) => Some(CondValue::Bool(false)),
                (CondOp::Or, true) => Some(CondValue::Bool(true)),
                _ => boolean(eval_cond(b, lookup)?)?.map(CondValue::Bool),
            }
        }
        CondExpr::Bin(op @ (CondOp::Eq | CondOp::Ne), a, b) => {
            let (Some(l), Some(r)) = (eval_cond(a, lookup)?, eval_cond(b, lookup)?) else { return Ok(None) };
            let same = match (&l, &r) {
                (CondValue::Int(_), CondValue::Int(_)) | (CondValue::Bool(_), CondValue::Bool(_)) => l == r,
                _ => return Err(CondError::IllTyped("comparison of integer with boolean".into())),
            };
            Some(CondValue::Bool(if *op == CondOp::Eq { same } else { !same }))
        }
        CondExpr::Bin(op, a, b) => {
            let (Some(l), Some(r)) = (int(eval_cond(a, lookup)?)?, int(eval_cond(b, lookup)?)?) else {
                return Ok(None);
            };
            match op {
                CondOp::Lt => Some(CondValue::Bool(l < r)),
                CondOp::Le => Some(CondValue::Bool(l <= r)),
                CondOp::Gt => Some(CondValue::Bool(l > r)),
                CondOp::Ge => Some(CondValue::Bool(l >= r)),
                CondOp::Add => Some(CondValue::Int(l + r)),
                CondOp::Sub => Some(CondValue::Int(l - r)),
                CondOp::Mul => Some(CondValue::Int(l * r)),
                CondOp::Pow => {
                    if r.is_negative() {
                        None
                    } else if r.is_zero() {
                        Some(CondValue::Int(BigInt::one()))
                    } else {
                        r.to_u32()
                            .filter(|e| *e <= MAX_EXPONENT)
                            .map(|e| CondValue::Int(num_traits::pow(l, e as usize)))
                    }
                }
                _ => unreachable!("boolean operators handled above"),
            }
        }
    })
}

/// Value of a constant-bound pattern variable usable in conditions.
pub fn cond_value_of(name: &str, e: &Expr) -> Result<CondValue, CondError> {
    if !is_constant(e) {
        return Err(CondError::NonConstantBinding(name.to_string()));
    }
    match e.as_ident() {
        Some(Ident::IntLit(n)) => Ok(CondValue::Int(BigInt::from(*n))),
        Some(Ident::BoolLit(b)) => Ok(CondValue::Bool(*b)),
        _ => Err(CondError::IllTyped(format!("`{name}` is not an integer or boolean"))),
    }
}

pub fn lookup_in<'a>(b: &'a Bindings) -> impl Fn(&Var) -> Result<CondValue, CondError> + 'a {
    move |v: &Var| {
        let e = b.get(&v.id).ok_or_else(|| CondError::UnboundVariable(v.name.to_string()))?;
        cond_value_of(&v.name, e)
    }
}

pub fn eval_side_condition(c: &SideCond, b: &Bindings) -> Result<bool, CondError> {
    match eval_cond(c, &lookup_in(b))? {
        None => Ok(false),
        Some(CondValue::Bool(v)) => Ok(v),
        Some(CondValue::Int(_)) => Err(CondError::IllTyped("condition is not boolean".into())),
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum WfError {
    #[error("side condition mentions `{0}`, which is not marked constant")]
    NonConstantInSideCondition(String),
    #[error("right-hand side mentions `{0}`, which the left-hand side does not bind")]
    UnboundRhsVar(String),
    #[error("left-hand side has type {lhs} but right-hand side has type {rhs}")]
    TypeMismatch { lhs: String, rhs: String },
    #[error("ill-typed rule: {0}")]
    IllTyped(String),
    #[error("condition variable `{0}` must have type int or bool")]
    NonScalarConditionVar(String),
    #[error("side condition must be boolean")]
    ConditionNotBoolean,
    #[error("left-hand side is a bare pattern variable")]
    BareWildcardLhs,
    #[error("pattern variable `{0}` occurs more than once in the left-hand side")]
    NonLinearPattern(String),
    #[error("rule variable `{0}` is declared but never bound by the left-hand side")]
    UnusedVariable(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum CTy {
    Int,
    Bool,
}

fn cond_type(c: &CondExpr, var_ty: &dyn Fn(&Var) -> Option<CTy>) -> Result<CTy, String> {
    let want = |c: &CondExpr, t: CTy| -> Result<(), String> {
        let got = cond_type(c, var_ty)?;
        if got == t {
            Ok(())
        } else {
            Err(format!("`{c}` should be {}", if t == CTy::Int { "an integer" } else { "a boolean" }))
        }
    };
    match c {
        CondExpr::Int(_) => Ok(CTy::Int),
        CondExpr::Bool(_) => Ok(CTy::Bool),
        CondExpr::Var(v) => var_ty(v).ok_or_else(|| format!("`{}` is not an integer or boolean", v.name)),
        CondExpr::Not(a) => want(a, CTy::Bool).map(|_| CTy::Bool),
        CondExpr::Log2(a) => want(a, CTy::Int).map(|_| CTy::Int),
        CondExpr::Bin(op, a, b) => match op {
            CondOp::And | CondOp::Or => {
                want(a, CTy::Bool)?;
                want(b, CTy::Bool)?;
                Ok(CTy::Bool)
            }
            CondOp::Eq | CondOp::Ne => {
                let t = cond_type(a, var_ty)?;
                want(b, t)?;
                Ok(CTy::Bool)
            }
            CondOp::Lt | CondOp::Le | CondOp::Gt | CondOp::Ge => {
                want(a, CTy::Int)?;
                want(b, CTy::Int)?;
                Ok(CTy::Bool)
            }
            CondOp::Add | CondOp::Sub | CondOp::Mul | CondOp::Pow => {
                want(a, CTy::Int)?;
                want(b, CTy::Int)?;
                Ok(CTy::Int)
            }
        },
    }
}

/// All well-formedness problems of a rule; empty means the rule is usable.
pub fn check_rule_wf(r: &RewriteRule) -> Vec<WfError> {
    let mut errs = Vec::new();
    let decl: HashMap<VarId, &crate::pattern::PatVar> = r.vars.iter().map(|p| (p.var.id, p)).collect();

    // left-hand side
    if matches!(r.lhs, Pattern::Wildcard(_) | Pattern::ConstWildcard(_)) {
        errs.push(WfError::BareWildcardLhs);
    }
    let mut seen = HashSet::new();
    for v in r.lhs.vars() {
        if !seen.insert(v.id) {
            errs.push(WfError::NonLinearPattern(v.name.to_string()));
        }
    }
    for p in &r.vars {
        if !seen.contains(&p.var.id) {
            errs.push(WfError::UnusedVariable(p.var.name.to_string()));
        }
    }

    // conditions and computed constants only see constant scalars
    let scalar = |v: &Var| -> Option<CTy> {
        match decl.get(&v.id).map(|p| &p.ty) {
            Some(t) if *t == ObjType::INT => Some(CTy::Int),
            Some(t) if *t == ObjType::BOOL => Some(CTy::Bool),
            _ => None,
        }
    };
    let check_vars = |c: &CondExpr, errs: &mut Vec<WfError>| {
        for v in c.vars() {
            match decl.get(&v.id) {
                Some(p) if p.constant => {
                    if scalar(&v).is_none() {
                        errs.push(WfError::NonScalarConditionVar(v.name.to_string()));
                    }
                }
                _ => errs.push(WfError::NonConstantInSideCondition(v.name.to_string())),
            }
        }
    };
    if let Some(c) = &r.side_condition {
        check_vars(c, &mut errs);
        if errs.is_empty() {
            match cond_type(c, &scalar) {
                Ok(CTy::Bool) => {}
                Ok(CTy::Int) => errs.push(WfError::ConditionNotBoolean),
                Err(m) => errs.push(WfError::IllTyped(m)),
            }
        }
    }
    for (_, c) in &r.computed {
        let before = errs.len();
        check_vars(c, &mut errs);
        if errs.len() == before {
            match cond_type(c, &scalar) {
                Ok(CTy::Int) => {}
                Ok(CTy::Bool) => errs.push(WfError::IllTyped(format!("computed constant `{c}` must be an integer"))),
                Err(m) => errs.push(WfError::IllTyped(m)),
            }
        }
    }

    // right-hand side scope and types
    let computed: HashSet<VarId> = r.computed.iter().map(|(v, _)| v.id).collect();
    for v in free_vars(&r.rhs) {
        if !seen.contains(&v.id) && !computed.contains(&v.id) {
            errs.push(WfError::UnboundRhsVar(v.name.to_string()));
        }
    }
    if errs.is_empty() {
        let mut env: TypeEnv = r.vars.iter().map(|p| (p.var.id, p.ty.clone())).collect();
        for (v, _) in &r.computed {
            env.insert(v.id, ObjType::INT);
        }
        match (type_check(&r.lhs.to_expr(), &env), type_check(&r.rhs, &env)) {
            (Ok(l), Ok(rt)) if l == rt => {}
            (Ok(l), Ok(rt)) => errs.push(WfError::TypeMismatch { lhs: l.to_string(), rhs: rt.to_string() }),
            (Err(e), _) | (_, Err(e)) => errs.push(WfError::IllTyped(e.to_string())),
        }
    }
    errs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m() -> Var {
        Var::fresh("m")
    }

    fn power_of_two(m: &Var) -> CondExpr {
        // 2 ^ log2floor m == m
        CondExpr::bin(
            CondOp::Eq,
            CondExpr::bin(CondOp::Pow, CondExpr::Int(2.into()), CondExpr::Log2(Box::new(CondExpr::Var(m.clone())))),
            CondExpr::Var(m.clone()),
        )
    }

    fn bind(v: &Var, n: i128) -> Bindings {
        let mut b = Bindings::new();
        b.insert(v.id, Expr::int(n));
        b
    }

    #[test]
    fn power_of_two_condition() {
        let v = m();
        let c = power_of_two(&v);
        assert!(eval_side_condition(&c, &bind(&v, 4)).unwrap());
        assert!(!eval_side_condition(&c, &bind(&v, 3)).unwrap());
        // log2floor 0 is undefined, so the condition is false
        assert!(!eval_side_condition(&c, &bind(&v, 0)).unwrap());
    }

    #[test]
    fn bound_below_two_to_the_64() {
        let u = Var::fresh("u");
        let c = CondExpr::bin(
            CondOp::Lt,
            CondExpr::Var(u.clone()),
            CondExpr::bin(CondOp::Pow, CondExpr::Int(2.into()), CondExpr::Int(64.into())),
        );
        assert!(eval_side_condition(&c, &bind(&u, (1i128 << 64) - 1)).unwrap());
        assert!(!eval_side_condition(&c, &bind(&u, 1i128 << 64)).unwrap());
    }

    #[test]
    fn zero_to_the_zero_is_one() {
        let c = CondExpr::bin(
            CondOp::Eq,
            CondExpr::bin(CondOp::Pow, CondExpr::Int(0.into()), CondExpr::Int(0.into())),
            CondExpr::Int(1.into()),
        );
        assert!(eval_side_condition(&c, &Bindings::new()).unwrap());
    }

    #[test]
    fn non_constant_binding_is_an_error() {
        let v = m();
        let x = Var::fresh("x");
        let mut b = Bindings::new();
        b.insert(v.id, Expr::var(&x));
        assert_eq!(
            eval_side_condition(&power_of_two(&v), &b),
            Err(CondError::NonConstantBinding("m".into()))
        );
    }

    #[test]
    fn display_round_trips_precedence() {
        let v = m();
        assert_eq!(power_of_two(&v).to_string(), "2 ^ log2floor m == m");
        let c = CondExpr::bin(
            CondOp::Mul,
            CondExpr::bin(CondOp::Add, CondExpr::Int(1.into()), CondExpr::Int(2.into())),
            CondExpr::Not(Box::new(CondExpr::Bool(true))),
        );
        assert_eq!(c.to_string(), "(1 + 2) * (not true)");
    }
}
