//! Object-language types.

use std::fmt;
use std::sync::Arc;

/// Base types. Containers nest only base kinds, never arrows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BaseKind {
    Int,
    Bool,
    Unit,
    List(Box<BaseKind>),
    Pair(Box<BaseKind>, Box<BaseKind>),
}

impl BaseKind {
    pub fn list(elem: BaseKind) -> Self {
        BaseKind::List(Box::new(elem))
    }

    pub fn pair(a: BaseKind, b: BaseKind) -> Self {
        BaseKind::Pair(Box::new(a), Box::new(b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ObjType {
    Base(BaseKind),
    Arrow(Arc<ObjType>, Arc<ObjType>),
}

impl ObjType {
    pub const INT: ObjType = ObjType::Base(BaseKind::Int);
    pub const BOOL: ObjType = ObjType::Base(BaseKind::Bool);
    pub const UNIT: ObjType = ObjType::Base(BaseKind::Unit);

    pub fn arrow(dom: ObjType, cod: ObjType) -> Self {
        ObjType::Arrow(Arc::new(dom), Arc::new(cod))
    }

    /// `a1 -> a2 -> ... -> result`
    pub fn arrows<I>(args: I, result: ObjType) -> Self
    where
        I: IntoIterator<Item = ObjType>,
        I::IntoIter: DoubleEndedIterator,
    {
        args.into_iter()
            .rev()
            .fold(result, |acc, a| ObjType::arrow(a, acc))
    }

    pub fn list(elem: BaseKind) -> Self {
        ObjType::Base(BaseKind::list(elem))
    }

    pub fn pair(a: BaseKind, b: BaseKind) -> Self {
        ObjType::Base(BaseKind::pair(a, b))
    }

    pub fn is_base(&self) -> bool {
        matches!(self, ObjType::Base(_))
    }

    pub fn as_base(&self) -> Option<&BaseKind> {
        match self {
            ObjType::Base(b) => Some(b),
            ObjType::Arrow(..) => None,
        }
    }

    pub fn as_arrow(&self) -> Option<(&ObjType, &ObjType)> {
        match self {
            ObjType::Arrow(d, c) => Some((d, c)),
            ObjType::Base(_) => None,
        }
    }

    /// Number of arguments before a base type is reached.
    pub fn arity(&self) -> usize {
        let mut n = 0;
        let mut t = self;
        while let ObjType::Arrow(_, c) = t {
            n += 1;
            t = c;
        }
        n
    }
}

impl From<BaseKind> for ObjType {
    fn from(b: BaseKind) -> Self {
        ObjType::Base(b)
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_base(self, f, 0)
    }
}

// precedence: 0 = pair level, 1 = list argument level
fn fmt_base(b: &BaseKind, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
    match b {
        BaseKind::Int => f.write_str("int"),
        BaseKind::Bool => f.write_str("bool"),
        BaseKind::Unit => f.write_str("unit"),
        BaseKind::List(e) => {
            if prec > 1 {
                f.write_str("(")?;
            }
            f.write_str("list ")?;
            fmt_base(e, f, 2)?;
            if prec > 1 {
                f.write_str(")")?;
            }
            Ok(())
        }
        BaseKind::Pair(a, c) => {
            if prec > 0 {
                f.write_str("(")?;
            }
            fmt_base(a, f, 1)?;
            f.write_str(" * ")?;
            fmt_base(c, f, 1)?;
            if prec > 0 {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for ObjType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjType::Base(b) => write!(f, "{b}"),
            ObjType::Arrow(d, c) => {
                if d.is_base() {
                    write!(f, "{d} -> {c}")
                } else {
                    write!(f, "({d}) -> {c}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_is_minimally_parenthesized() {
        let t = ObjType::arrow(
            ObjType::arrow(ObjType::INT, ObjType::INT),
            ObjType::list(BaseKind::pair(BaseKind::Int, BaseKind::list(BaseKind::Bool))),
        );
        assert_eq!(t.to_string(), "(int -> int) -> list (int * list bool)");
        assert_eq!(ObjType::pair(BaseKind::pair(BaseKind::Int, BaseKind::Int), BaseKind::Unit).to_string(), "(int * int) * unit");
    }

    #[test]
    fn arity_counts_arrows() {
        let t = ObjType::arrows([ObjType::INT, ObjType::BOOL], ObjType::UNIT);
        assert_eq!(t.arity(), 2);
        assert_eq!(ObjType::INT.arity(), 0);
    }
}
