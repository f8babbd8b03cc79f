//! Reference denotational interpreter: big-step call-by-value evaluation
//! with environment passing. This is the semantics every engine is tested
//! against.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{Expr, ExprKind, VarId};
use crate::ident::Ident;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("opaque symbol `{0}` has no definition")]
    OpaqueSymbol(String),
    /// Only reachable on ill-typed input.
    #[error("ill-shaped value: {0}")]
    IllShaped(String),
}

pub type HostFn = dyn Fn(Value) -> Result<Value, EvalError> + Send + Sync;

#[derive(Clone)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Unit,
    List(Arc<Vec<Value>>),
    Pair(Arc<(Value, Value)>),
    Fun(Arc<HostFn>),
}

impl Value {
    pub fn int(n: impl Into<BigInt>) -> Self {
        Value::Int(n.into())
    }

    pub fn as_int(&self) -> Result<&BigInt, EvalError> {
        match self {
            Value::Int(n) => Ok(n),
            other => Err(EvalError::IllShaped(format!("expected integer, got {other:?}"))),
        }
    }

    fn as_list(&self) -> Result<&Arc<Vec<Value>>, EvalError> {
        match self {
            Value::List(l) => Ok(l),
            other => Err(EvalError::IllShaped(format!("expected list, got {other:?}"))),
        }
    }

    fn as_pair(&self) -> Result<&(Value, Value), EvalError> {
        match self {
            Value::Pair(p) => Ok(p),
            other => Err(EvalError::IllShaped(format!("expected pair, got {other:?}"))),
        }
    }

    pub fn apply(&self, arg: Value) -> Result<Value, EvalError> {
        match self {
            Value::Fun(f) => f(arg),
            other => Err(EvalError::IllShaped(format!("cannot apply {other:?}"))),
        }
    }

    pub fn is_function(&self) -> bool {
        matches!(self, Value::Fun(_))
    }
}

/// Functions are never equal; first-order values compare structurally.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Unit, Value::Unit) => true,
            (Value::List(a), Value::List(b)) => a == b,
            (Value::Pair(a), Value::Pair(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Unit => f.write_str("tt"),
            Value::List(l) => f.debug_list().entries(l.iter()).finish(),
            Value::Pair(p) => write!(f, "({:?}, {:?})", p.0, p.1),
            Value::Fun(_) => f.write_str("<fun>"),
        }
    }
}

fn fun(f: impl Fn(Value) -> Result<Value, EvalError> + Send + Sync + 'static) -> Value {
    Value::Fun(Arc::new(f))
}

fn fun2(f: impl Fn(Value, Value) -> Result<Value, EvalError> + Send + Sync + 'static) -> Value {
    let f = Arc::new(f);
    fun(move |a| {
        let f = f.clone();
        Ok(fun(move |b| f(a.clone(), b)))
    })
}

fn fun3(
    f: impl Fn(Value, Value, Value) -> Result<Value, EvalError> + Send + Sync + 'static,
) -> Value {
    let f = Arc::new(f);
    fun(move |a| {
        let f = f.clone();
        Ok(fun2(move |b, c| f(a.clone(), b, c)))
    })
}

fn int_op(f: fn(&BigInt, &BigInt) -> Result<BigInt, EvalError>) -> Value {
    fun2(move |a, b| Ok(Value::Int(f(a.as_int()?, b.as_int()?)?)))
}

const MAX_SHIFT: u64 = 1 << 20;
const MAX_EXPONENT: u32 = 1 << 16;

pub fn shr(a: &BigInt, b: &BigInt) -> BigInt {
    if b.is_negative() {
        let s = b.abs().to_u64().filter(|s| *s <= MAX_SHIFT).unwrap_or(MAX_SHIFT);
        a << s
    } else {
        match b.to_u64().filter(|s| *s <= MAX_SHIFT) {
            Some(s) => a >> s,
            None if a.is_negative() => BigInt::from(-1),
            None => BigInt::zero(),
        }
    }
}

pub fn pow(a: &BigInt, b: &BigInt) -> Result<BigInt, EvalError> {
    if b.is_negative() {
        return Err(EvalError::InvalidArgument(format!("negative exponent {b}")));
    }
    let e = b
        .to_u32()
        .filter(|e| *e <= MAX_EXPONENT)
        .ok_or_else(|| EvalError::InvalidArgument(format!("exponent {b} too large")))?;
    Ok(num_traits::pow(a.clone(), e as usize))
}

pub fn log2_floor(n: &BigInt) -> Option<BigInt> {
    if n.is_positive() {
        Some(BigInt::from(n.bits() - 1))
    } else {
        None
    }
}

/// `(carry, sum mod 2^64)` of `a + b`.
pub fn add_with_carry64(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    let s = a + b;
    let modulus = BigInt::one() << 64u32;
    let (carry, sum) = s.div_mod_floor(&modulus);
    (carry, sum)
}

/// `n` when `lo <= n < hi`; out-of-range input returns `lo`.
pub fn clip<T: PartialOrd + Clone>(lo: &T, hi: &T, n: &T) -> T {
    if lo <= n && n < hi {
        n.clone()
    } else {
        lo.clone()
    }
}

/// Meaning of an identifier.
pub fn denote_ident(i: &Ident) -> Result<Value, EvalError> {
    use Ident::*;
    Ok(match i {
        IntLit(n) => Value::int(*n),
        BoolLit(b) => Value::Bool(*b),
        Unit => Value::Unit,
        Nil(_) => Value::List(Arc::new(Vec::new())),
        Add => int_op(|a, b| Ok(a + b)),
        Sub => int_op(|a, b| Ok(a - b)),
        Mul => int_op(|a, b| Ok(a * b)),
        Div => int_op(|a, b| {
            if b.is_zero() {
                Err(EvalError::DivisionByZero)
            } else {
                Ok(a.div_floor(b))
            }
        }),
        Shr => int_op(|a, b| Ok(shr(a, b))),
        Pow => int_op(pow),
        Log2Floor => fun(|a| {
            let n = a.as_int()?;
            log2_floor(n)
                .map(Value::Int)
                .ok_or_else(|| EvalError::InvalidArgument(format!("log2floor of {n}")))
        }),
        Fst(..) => fun(|p| Ok(p.as_pair()?.0.clone())),
        Snd(..) => fun(|p| Ok(p.as_pair()?.1.clone())),
        PairMk(..) => fun2(|a, b| Ok(Value::Pair(Arc::new((a, b))))),
        Cons(_) => fun2(|h, t| {
            let mut items = Vec::with_capacity(t.as_list()?.len() + 1);
            items.push(h);
            items.extend(t.as_list()?.iter().cloned());
            Ok(Value::List(Arc::new(items)))
        }),
        AddWithCarry64 => fun2(|a, b| {
            let (c, s) = add_with_carry64(a.as_int()?, b.as_int()?);
            Ok(Value::Pair(Arc::new((Value::Int(c), Value::Int(s)))))
        }),
        Clip => fun3(|l, u, n| Ok(Value::Int(clip(l.as_int()?, u.as_int()?, n.as_int()?)))),
        Comment(..) => fun(Ok),
        ListRect(..) => fun3(|nil_case, cons_case, l| {
            let items = l.as_list()?.clone();
            let mut acc = nil_case;
            for i in (0..items.len()).rev() {
                let tail = Value::List(Arc::new(items[i + 1..].to_vec()));
                acc = cons_case.apply(items[i].clone())?.apply(tail)?.apply(acc)?;
            }
            Ok(acc)
        }),
        NatRect(_) => fun3(|zero_case, succ_case, n| {
            let n = n.as_int()?;
            let count = if n.is_positive() {
                n.to_u64()
                    .filter(|c| *c <= 1 << 24)
                    .ok_or_else(|| EvalError::InvalidArgument(format!("nat_rect on {n}")))?
            } else {
                0
            };
            let mut acc = zero_case;
            for k in 0..count {
                acc = succ_case.apply(Value::int(k))?.apply(acc)?;
            }
            Ok(acc)
        }),
        Opaque(s) => match &s.definition {
            Some(def) => denote(def, &HashMap::new())?,
            None => return Err(EvalError::OpaqueSymbol(s.name.to_string())),
        },
    })
}

type Env = im::HashMap<VarId, Value>;

pub fn denote(e: &Expr, env: &HashMap<VarId, Value>) -> Result<Value, EvalError> {
    let env: Env = env.iter().map(|(k, v)| (*k, v.clone())).collect();
    eval(e, &env)
}

fn eval(e: &Expr, env: &Env) -> Result<Value, EvalError> {
    stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || match e.kind() {
        ExprKind::Var(v) => env
            .get(&v.id)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(v.name.to_string())),
        ExprKind::Ident(i) => denote_ident(i),
        ExprKind::App(f, a) => {
            let fv = eval(f, env)?;
            let av = eval(a, env)?;
            fv.apply(av)
        }
        ExprKind::Abs(v, _, body) => {
            let env = env.clone();
            let id = v.id;
            let body = body.clone();
            Ok(fun(move |x| eval(&body, &env.update(id, x))))
        }
        ExprKind::LetIn(v, rhs, body) => {
            // let chains are walked iteratively
            let mut env = env.update(v.id, eval(rhs, env)?);
            let mut cur = body;
            while let ExprKind::LetIn(v, rhs, body) = cur.kind() {
                let value = eval(rhs, &env)?;
                env.insert(v.id, value);
                cur = body;
            }
            eval(cur, &env)
        }
    })
}
