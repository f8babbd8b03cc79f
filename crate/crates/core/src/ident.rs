//! Constant identifiers of the object language.
//!
//! Every identifier is a variant of one enumeration so dispatch is a tag
//! comparison. Polymorphic primitives carry their instance types as payload,
//! which makes [`Ident::ty`] a pure function of the identifier.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::expr::Expr;
use crate::types::{BaseKind, ObjType};

/// A user-registered opaque constant. An optional definition gives it meaning
/// to the reference interpreter; the engines never unfold it on their own.
#[derive(Clone, Debug)]
pub struct Symbol {
    pub name: Arc<str>,
    pub ty: ObjType,
    pub definition: Option<Expr>,
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.ty == other.ty
    }
}

impl Eq for Symbol {}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        self.ty.hash(state);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ident {
    IntLit(i128),
    BoolLit(bool),
    Unit,
    Nil(BaseKind),
    Add,
    Sub,
    Mul,
    /// Floor division.
    Div,
    Shr,
    Pow,
    Log2Floor,
    Fst(BaseKind, BaseKind),
    Snd(BaseKind, BaseKind),
    PairMk(BaseKind, BaseKind),
    Cons(BaseKind),
    /// `int -> int -> int * int`, returning `(carry, sum mod 2^64)`.
    AddWithCarry64,
    /// `clip lo hi n`: `n` when `lo <= n < hi`, otherwise `lo`.
    Clip,
    /// Identity annotated with a message.
    Comment(Arc<str>, ObjType),
    /// `list_rect : P -> (A -> list A -> P -> P) -> list A -> P`
    ListRect(BaseKind, ObjType),
    /// `nat_rect : P -> (int -> P -> P) -> int -> P`
    NatRect(ObjType),
    Opaque(Arc<Symbol>),
}

fn int2(result: ObjType) -> ObjType {
    ObjType::arrows([ObjType::INT, ObjType::INT], result)
}

impl Ident {
    pub fn ty(&self) -> ObjType {
        use Ident::*;
        match self {
            IntLit(_) => ObjType::INT,
            BoolLit(_) => ObjType::BOOL,
            Unit => ObjType::UNIT,
            Nil(k) => ObjType::list(k.clone()),
            Add | Sub | Mul | Div | Shr | Pow => int2(ObjType::INT),
            Log2Floor => ObjType::arrow(ObjType::INT, ObjType::INT),
            Fst(a, b) => ObjType::arrow(ObjType::pair(a.clone(), b.clone()), a.clone().into()),
            Snd(a, b) => ObjType::arrow(ObjType::pair(a.clone(), b.clone()), b.clone().into()),
            PairMk(a, b) => ObjType::arrows(
                [a.clone().into(), b.clone().into()],
                ObjType::pair(a.clone(), b.clone()),
            ),
            Cons(k) => ObjType::arrows(
                [k.clone().into(), ObjType::list(k.clone())],
                ObjType::list(k.clone()),
            ),
            AddWithCarry64 => int2(ObjType::pair(BaseKind::Int, BaseKind::Int)),
            Clip => ObjType::arrows([ObjType::INT, ObjType::INT, ObjType::INT], ObjType::INT),
            Comment(_, t) => ObjType::arrow(t.clone(), t.clone()),
            ListRect(a, p) => {
                let list = ObjType::list(a.clone());
                let step = ObjType::arrows([a.clone().into(), list.clone(), p.clone()], p.clone());
                ObjType::arrows([p.clone(), step, list], p.clone())
            }
            NatRect(p) => {
                let step = ObjType::arrows([ObjType::INT, p.clone()], p.clone());
                ObjType::arrows([p.clone(), step, ObjType::INT], p.clone())
            }
            Opaque(s) => s.ty.clone(),
        }
    }

    /// Literal leaves: the atoms of compile-time constants.
    pub fn is_literal(&self) -> bool {
        matches!(
            self,
            Ident::IntLit(_) | Ident::BoolLit(_) | Ident::Unit | Ident::Nil(_)
        )
    }

    /// Constructors whose full applications to constants are constants.
    pub fn is_constructor(&self) -> bool {
        matches!(self, Ident::PairMk(..) | Ident::Cons(_))
    }

    pub fn as_int(&self) -> Option<i128> {
        match self {
            Ident::IntLit(n) => Some(*n),
            _ => None,
        }
    }

    /// Surface name used by the printer when the identifier is not printed
    /// through dedicated syntax.
    pub fn name(&self) -> String {
        use Ident::*;
        match self {
            IntLit(n) if *n < 0 => format!("(-{})", n.unsigned_abs()),
            IntLit(n) => n.to_string(),
            BoolLit(b) => b.to_string(),
            Unit => "tt".into(),
            Nil(_) => "[]".into(),
            Add => "(+)".into(),
            Sub => "(-)".into(),
            Mul => "(*)".into(),
            Div => "(/)".into(),
            Shr => "(>>)".into(),
            Pow => "(^)".into(),
            Log2Floor => "log2floor".into(),
            Fst(..) => "fst".into(),
            Snd(..) => "snd".into(),
            PairMk(..) => "pair".into(),
            Cons(_) => "(::)".into(),
            AddWithCarry64 => "add_with_carry64".into(),
            Clip => "clip".into(),
            Comment(text, _) => format!("comment[{text:?}]"),
            ListRect(..) => "list_rect".into(),
            NatRect(_) => "nat_rect".into(),
            Opaque(s) => s.name.to_string(),
        }
    }

    /// Binary infix operator symbol and its precedence level.
    pub fn infix(&self) -> Option<(&'static str, u8)> {
        match self {
            Ident::Cons(_) => Some(("::", 1)),
            Ident::Shr => Some((">>", 2)),
            Ident::Add => Some(("+", 3)),
            Ident::Sub => Some(("-", 3)),
            Ident::Mul => Some(("*", 4)),
            Ident::Div => Some(("/", 4)),
            Ident::Pow => Some(("^", 5)),
            _ => None,
        }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_has_curried_int_signature() {
        assert_eq!(Ident::Add.ty().to_string(), "int -> int -> int");
    }

    #[test]
    fn eliminator_signatures() {
        let lr = Ident::ListRect(BaseKind::Int, ObjType::list(BaseKind::Int));
        assert_eq!(
            lr.ty().to_string(),
            "list int -> (int -> list int -> list int -> list int) -> list int -> list int"
        );
        let nr = Ident::NatRect(ObjType::INT);
        assert_eq!(nr.ty().to_string(), "int -> (int -> int -> int) -> int -> int");
    }

    #[test]
    fn symbols_compare_by_name_and_type() {
        let a = Symbol { name: "f".into(), ty: ObjType::INT, definition: None };
        let b = Symbol { name: "f".into(), ty: ObjType::INT, definition: Some(Expr::int(1)) };
        assert_eq!(Ident::Opaque(Arc::new(a)), Ident::Opaque(Arc::new(b)));
    }
}
