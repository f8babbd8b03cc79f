//! Interval analysis of straightline integer code and clip insertion.
//!
//! Intervals are half-open: `lo <= n < hi`. After analysis every variable
//! occurrence with a known interval is wrapped as `clip lo hi x`, so rules
//! can read the bounds off constant arguments.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::denote::shr;
use crate::expr::{Expr, ExprKind, Var, VarId};
use crate::ident::Ident;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigInt,
    pub hi: BigInt,
}

impl Interval {
    /// `None` when the interval would be empty.
    pub fn new(lo: impl Into<BigInt>, hi: impl Into<BigInt>) -> Option<Self> {
        let (lo, hi) = (lo.into(), hi.into());
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn singleton(n: impl Into<BigInt>) -> Self {
        let lo = n.into();
        let hi = &lo + 1;
        Interval { lo, hi }
    }

    /// Largest member.
    pub fn max(&self) -> BigInt {
        &self.hi - 1
    }

    pub fn contains(&self, n: &BigInt) -> bool {
        &self.lo <= n && n < &self.hi
    }

    pub fn is_subset(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn as_singleton(&self) -> Option<&BigInt> {
        (self.hi == &self.lo + 1).then_some(&self.lo)
    }

    fn hull(points: impl IntoIterator<Item = BigInt>) -> Interval {
        let mut it = points.into_iter();
        let first = it.next().expect("at least one point");
        let (mut lo, mut hi) = (first.clone(), first);
        for p in it {
            if p < lo {
                lo = p;
            } else if p > hi {
                hi = p;
            }
        }
        Interval { lo, hi: hi + 1 }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// Abstract value of a base-typed expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Range {
    Known(Interval),
    Pair(Box<Range>, Box<Range>),
    Unknown,
}

impl Range {
    pub fn known(&self) -> Option<&Interval> {
        match self {
            Range::Known(i) => Some(i),
            _ => None,
        }
    }

    /// Whether a concrete value lies in the range. Non-integers only match
    /// `Unknown`.
    pub fn admits(&self, v: &crate::denote::Value) -> bool {
        use crate::denote::Value;
        match (self, v) {
            (Range::Unknown, _) => true,
            (Range::Known(i), Value::Int(n)) => i.contains(n),
            (Range::Pair(a, b), Value::Pair(p)) => a.admits(&p.0) && b.admits(&p.1),
            _ => false,
        }
    }
}

pub type BoundsEnv = HashMap<VarId, Range>;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("not straightline code: {0}")]
    NonStraightlineInput(String),
    #[error("no interval rule for `{0}`")]
    UnsupportedOp(String),
}

/// Shift amounts beyond this make `>>` results unknown.
const MAX_SHIFT: i64 = 1024;

fn ints(args: &[Range]) -> Option<Vec<&Interval>> {
    args.iter().map(Range::known).collect()
}

fn corners(a: &Interval, b: &Interval, f: impl Fn(&BigInt, &BigInt) -> BigInt) -> Interval {
    let (am, bm) = (a.max(), b.max());
    Interval::hull([f(&a.lo, &b.lo), f(&a.lo, &bm), f(&am, &b.lo), f(&am, &bm)])
}

/// Sound interval transfer function for one identifier.
pub fn interval_op(op: &Ident, args: &[Range]) -> Result<Range, BoundsError> {
    let unsupported = || Err(BoundsError::UnsupportedOp(op.name()));
    let known = |i: Interval| Ok(Range::Known(i));
    match op {
        Ident::IntLit(n) if args.is_empty() => return known(Interval::singleton(*n)),
        Ident::Mul if args.len() == 2 => {
            let zero = Interval::singleton(0);
            if args.iter().any(|a| a.known() == Some(&zero)) {
                return known(zero);
            }
        }
        Ident::Fst(..) | Ident::Snd(..) if args.len() == 1 => {
            return Ok(match &args[0] {
                Range::Pair(a, b) => {
                    if matches!(op, Ident::Fst(..)) {
                        (**a).clone()
                    } else {
                        (**b).clone()
                    }
                }
                _ => Range::Unknown,
            })
        }
        Ident::PairMk(..) if args.len() == 2 => {
            return Ok(Range::Pair(Box::new(args[0].clone()), Box::new(args[1].clone())))
        }
        _ => {}
    }
    let Some(iv) = ints(args) else {
        return match op {
            Ident::Add
            | Ident::Sub
            | Ident::Mul
            | Ident::Div
            | Ident::Shr
            | Ident::AddWithCarry64
            | Ident::Clip => partial_args(op, args),
            _ => unsupported(),
        };
    };
    match (op, iv.as_slice()) {
        (Ident::Add, [a, b]) => known(Interval { lo: &a.lo + &b.lo, hi: &a.hi + &b.hi - 1 }),
        (Ident::Sub, [a, b]) => known(Interval { lo: &a.lo - b.max(), hi: &a.hi - &b.lo }),
        (Ident::Mul, [a, b]) => known(corners(a, b, |x, y| x * y)),
        (Ident::Div, [a, b]) if b.lo.is_positive() => known(corners(a, b, |x, y| x.div_floor(y))),
        (Ident::Div, [_, _]) => Ok(Range::Unknown),
        (Ident::Shr, [a, b]) => {
            let small = |n: &BigInt| n.to_i64().is_some_and(|s| s.abs() <= MAX_SHIFT);
            if small(&b.lo) && small(&b.max()) {
                known(corners(a, b, shr))
            } else {
                Ok(Range::Unknown)
            }
        }
        (Ident::AddWithCarry64, [a, b]) => {
            let modulus = BigInt::one() << 64u32;
            let (slo, smax) = (&a.lo + &b.lo, a.max() + b.max());
            let (clo, cmax) = (slo.div_floor(&modulus), smax.div_floor(&modulus));
            let sum = if clo == cmax {
                Interval { lo: &slo - &clo * &modulus, hi: &smax - &clo * &modulus + 1 }
            } else {
                Interval { lo: BigInt::zero(), hi: modulus }
            };
            let carry = Interval { lo: clo, hi: cmax + 1 };
            Ok(Range::Pair(Box::new(Range::Known(carry)), Box::new(Range::Known(sum))))
        }
        (Ident::Clip, [l, u, n]) => Ok(clip_range(l, u, Some(n))),
        _ => unsupported(),
    }
}

/// Operators with an unknown argument: only `clip` with constant bounds
/// still says something.
fn partial_args(op: &Ident, args: &[Range]) -> Result<Range, BoundsError> {
    if let (Ident::Clip, [Range::Known(l), Range::Known(u), _]) = (op, args) {
        return Ok(clip_range(l, u, None));
    }
    Ok(Range::Unknown)
}

/// `clip l u n` returns either `n` or `l`.
fn clip_range(l: &Interval, u: &Interval, n: Option<&Interval>) -> Range {
    if let (Some(lo), Some(hi)) = (l.as_singleton(), u.as_singleton()) {
        return Range::Known(match Interval::new(lo.clone(), hi.clone()) {
            Some(target) => match n {
                Some(n) if n.is_subset(&target) => n.clone(),
                _ => target,
            },
            None => Interval::singleton(lo.clone()),
        });
    }
    match n {
        Some(n) => Range::Known(Interval::hull([l.lo.clone(), l.max(), n.lo.clone(), n.max()])),
        None => Range::Unknown,
    }
}

/// Result of analysing a term.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub clipped: Expr,
    /// Range of each let-bound variable, in binding order.
    pub let_ranges: Vec<(Var, Range)>,
    pub result: Range,
}

/// Infers intervals for every let-bound value of `e` and wraps each
/// variable occurrence with a known interval in a clip.
pub fn analyze(e: &Expr, input_bounds: &BoundsEnv) -> Result<Analysis, BoundsError> {
    let mut env = input_bounds.clone();
    let mut params = Vec::new();
    let mut cur = e;
    while let ExprKind::Abs(v, t, b) = cur.kind() {
        env.entry(v.id).or_insert(Range::Unknown);
        params.push((v.clone(), t.clone()));
        cur = b;
    }
    let mut lets = Vec::new();
    let mut let_ranges = Vec::new();
    while let ExprKind::LetIn(v, r, b) = cur.kind() {
        let (rc, range) = expr_range(r, &env)?;
        env.insert(v.id, range.clone());
        let_ranges.push((v.clone(), range));
        lets.push((v.clone(), rc));
        cur = b;
    }
    let (body, result) = expr_range(cur, &env)?;
    let body = lets.into_iter().rev().fold(body, |acc, (v, r)| Expr::let_in(v, r, acc));
    let clipped = params.into_iter().rev().fold(body, |acc, (v, t)| Expr::abs(v, t, acc));
    Ok(Analysis { clipped, let_ranges, result })
}

pub fn analyze_and_clip(e: &Expr, input_bounds: &BoundsEnv) -> Result<Expr, BoundsError> {
    Ok(analyze(e, input_bounds)?.clipped)
}

fn clip_var(x: &Expr, i: &Interval) -> Result<Expr, BoundsError> {
    let bound = |n: &BigInt| {
        n.to_i128()
            .map(Expr::int)
            .ok_or_else(|| BoundsError::UnsupportedOp(format!("bound {n} exceeds the literal range")))
    };
    Ok(Expr::apps(Expr::ident(Ident::Clip), [bound(&i.lo)?, bound(&i.hi)?, x.clone()]))
}

fn expr_range(e: &Expr, env: &BoundsEnv) -> Result<(Expr, Range), BoundsError> {
    stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || match e.kind() {
        ExprKind::Var(v) => {
            let r = env.get(&v.id).cloned().unwrap_or(Range::Unknown);
            match &r {
                Range::Known(i) => match clip_var(e, i) {
                    Ok(c) => Ok((c, r)),
                    Err(_) => Ok((e.clone(), r)),
                },
                _ => Ok((e.clone(), r)),
            }
        }
        ExprKind::Ident(i) => {
            let r = if i.is_literal() { interval_op(i, &[]).unwrap_or(Range::Unknown) } else { Range::Unknown };
            Ok((e.clone(), r))
        }
        ExprKind::App(..) => {
            let (head, args) = e.spine();
            let Some(op) = head.as_ident() else {
                return Err(BoundsError::NonStraightlineInput(format!("application of non-constant `{head}`")));
            };
            let mut out_args = Vec::with_capacity(args.len());
            let mut ranges = Vec::with_capacity(args.len());
            for a in args {
                let (ac, r) = expr_range(a, env)?;
                out_args.push(ac);
                ranges.push(r);
            }
            let r = interval_op(op, &ranges).unwrap_or(Range::Unknown);
            Ok((Expr::apps(head.clone(), out_args), r))
        }
        ExprKind::Abs(..) => Err(BoundsError::NonStraightlineInput("lambda below the top level".into())),
        ExprKind::LetIn(..) => Err(BoundsError::NonStraightlineInput("let in argument position".into())),
    })
}
