//! Recursive-descent parser producing surface syntax.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;

use super::lexer::{lex, Pos, Tok, Token};
use super::ParseError;
use crate::expr::Var;
use crate::ident::Ident;
use crate::side_cond::{CondExpr, CondOp};
use crate::types::{BaseKind, ObjType};

/// Identifier families whose instance types are inferred.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Nil,
    Fst,
    Snd,
    PairMk,
    Cons,
    Comment(Arc<str>),
    ListRect,
    NatRect,
}

#[derive(Clone, Debug)]
pub enum Builtin {
    Mono(Ident),
    Poly(Family),
}

#[derive(Clone, Debug)]
pub struct STerm {
    pub kind: SKind,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub enum SKind {
    Name(String),
    Int(i128),
    Builtin(Builtin),
    Lam(String, Option<ObjType>, Box<STerm>),
    Let(String, Option<ObjType>, Box<STerm>, Box<STerm>),
    App(Box<STerm>, Box<STerm>),
    Ascribe(Box<STerm>, ObjType),
    /// `'x`: a reference to a constant pattern variable.
    ConstRef(String),
    /// `'(e)`: a constant computed when a rule fires.
    Computed(CondExpr),
}

pub const KEYWORDS: &[&str] = &["let", "in", "rule", "symbol", "forall", "when", "not"];

/// Names that resolve to builtin identifiers unless shadowed by a binder.
pub fn builtin_by_name(name: &str) -> Option<Builtin> {
    use Builtin::*;
    Some(match name {
        "true" => Mono(Ident::BoolLit(true)),
        "false" => Mono(Ident::BoolLit(false)),
        "tt" => Mono(Ident::Unit),
        "nil" => Poly(Family::Nil),
        "fst" => Poly(Family::Fst),
        "snd" => Poly(Family::Snd),
        "pair" => Poly(Family::PairMk),
        "cons" => Poly(Family::Cons),
        "log2floor" => Mono(Ident::Log2Floor),
        "add_with_carry64" => Mono(Ident::AddWithCarry64),
        "clip" => Mono(Ident::Clip),
        "list_rect" => Poly(Family::ListRect),
        "nat_rect" => Poly(Family::NatRect),
        _ => return None,
    })
}

pub const BUILTIN_NAMES: &[&str] = &[
    "true", "false", "tt", "nil", "fst", "snd", "pair", "cons", "log2floor",
    "add_with_carry64", "clip", "list_rect", "nat_rect", "comment",
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Assoc {
    Left,
    Right,
}

fn infix_op(t: &Tok) -> Option<(Builtin, u8, Assoc)> {
    use Builtin::*;
    Some(match t {
        Tok::ColonColon => (Poly(Family::Cons), 1, Assoc::Right),
        Tok::Shr => (Mono(Ident::Shr), 2, Assoc::Left),
        Tok::Plus => (Mono(Ident::Add), 3, Assoc::Left),
        Tok::Minus => (Mono(Ident::Sub), 3, Assoc::Left),
        Tok::Star => (Mono(Ident::Mul), 4, Assoc::Left),
        Tok::Slash => (Mono(Ident::Div), 4, Assoc::Left),
        Tok::Caret => (Mono(Ident::Pow), 5, Assoc::Right),
        _ => return None,
    })
}

pub struct Parser {
    toks: Vec<Token>,
    i: usize,
    /// Names usable inside `'( ... )` and side conditions.
    pub cond_scope: Option<HashMap<String, Var>>,
}

impl Parser {
    pub fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, i: 0, cond_scope: None })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.pos(), msg)
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    pub fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn expect_name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn int_literal(&mut self, negative: bool) -> Result<i128, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(digits) => {
                let text = if negative { format!("-{digits}") } else { digits };
                text.parse::<i128>()
                    .map_err(|_| ParseError::at(pos, format!("integer literal {text} out of range")))
            }
            other => Err(ParseError::at(pos, format!("expected integer, found {}", other.describe()))),
        }
    }

    // ---- types ----

    pub fn ty(&mut self) -> Result<ObjType, ParseError> {
        let dom = self.ty_prod()?;
        if self.eat(&Tok::Arrow) {
            let cod = self.ty()?;
            Ok(ObjType::arrow(dom, cod))
        } else {
            Ok(dom)
        }
    }

    fn base_of(&self, t: ObjType, pos: Pos) -> Result<BaseKind, ParseError> {
        match t {
            ObjType::Base(b) => Ok(b),
            ObjType::Arrow(..) => Err(ParseError::at(pos, "lists and pairs hold base types only")),
        }
    }

    fn ty_prod(&mut self) -> Result<ObjType, ParseError> {
        let pos = self.pos();
        let mut t = self.ty_list()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rpos = self.pos();
            let r = self.ty_list()?;
            let a = self.base_of(t, pos)?;
            let b = self.base_of(r, rpos)?;
            t = ObjType::pair(a, b);
        }
        Ok(t)
    }

    fn ty_list(&mut self) -> Result<ObjType, ParseError> {
        if self.at_keyword("list") {
            self.bump();
            let pos = self.pos();
            let e = self.ty_list()?;
            return Ok(ObjType::list(self.base_of(e, pos)?));
        }
        match self.peek().clone() {
            Tok::Name(n) if n == "int" => {
                self.bump();
                Ok(ObjType::INT)
            }
            Tok::Name(n) if n == "bool" => {
                self.bump();
                Ok(ObjType::BOOL)
            }
            Tok::Name(n) if n == "unit" => {
                self.bump();
                Ok(ObjType::UNIT)
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.unexpected("a type")),
        }
    }

    // ---- terms ----

    fn mk(kind: SKind, pos: Pos) -> STerm {
        STerm { kind, pos }
    }

    pub fn term(&mut self) -> Result<STerm, ParseError> {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || {
            let pos = self.pos();
            if *self.peek() == Tok::Backslash {
                self.bump();
                return self.lambda(pos);
            }
            if self.at_keyword("let") {
                self.bump();
                let name = self.expect_name()?;
                let ann = if self.eat(&Tok::Colon) { Some(self.ty()?) } else { None };
                self.expect(Tok::Eq)?;
                let rhs = self.term()?;
                self.expect_keyword("in")?;
                let body = self.term()?;
                return Ok(Self::mk(SKind::Let(name, ann, Box::new(rhs), Box::new(body)), pos));
            }
            self.infix(0)
        })
    }

    fn lambda(&mut self, pos: Pos) -> Result<STerm, ParseError> {
        let mut binders: Vec<(String, Option<ObjType>)> = Vec::new();
        loop {
            match self.peek() {
                Tok::LParen => {
                    self.bump();
                    let n = self.expect_name()?;
                    self.expect(Tok::Colon)?;
                    let t = self.ty()?;
                    self.expect(Tok::RParen)?;
                    binders.push((n, Some(t)));
                }
                Tok::Name(_) => binders.push((self.expect_name()?, None)),
                _ => break,
            }
        }
        if binders.is_empty() {
            return Err(self.unexpected("a binder"));
        }
        if self.eat(&Tok::Colon) {
            if binders.len() != 1 || binders[0].1.is_some() {
                return Err(self.error("a `: type` annotation needs exactly one bare binder"));
            }
            binders[0].1 = Some(self.ty()?);
        }
        self.expect(Tok::Dot)?;
        let mut body = self.term()?;
        for (n, t) in binders.into_iter().rev() {
            body = Self::mk(SKind::Lam(n, t, Box::new(body)), pos);
        }
        Ok(body)
    }

    fn infix(&mut self, min: u8) -> Result<STerm, ParseError> {
        let mut lhs = self.app()?;
        loop {
            let Some((op, prec, assoc)) = infix_op(self.peek()) else { break };
            if prec < min {
                break;
            }
            let pos = self.pos();
            self.bump();
            let next = if assoc == Assoc::Left { prec + 1 } else { prec };
            let rhs = stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || self.infix(next))?;
            let f = Self::mk(SKind::Builtin(op), pos);
            lhs = Self::mk(
                SKind::App(Box::new(Self::mk(SKind::App(Box::new(f), Box::new(lhs)), pos)), Box::new(rhs)),
                pos,
            );
        }
        Ok(lhs)
    }

    fn atom_start(&self) -> bool {
        match self.peek() {
            Tok::Name(n) => !KEYWORDS.contains(&n.as_str()),
            Tok::Int(_) | Tok::LParen | Tok::LBracket | Tok::Quote => true,
            _ => false,
        }
    }

    fn app(&mut self) -> Result<STerm, ParseError> {
        let mut f = self.atom()?;
        while self.atom_start() {
            let pos = f.pos;
            let a = self.atom()?;
            f = Self::mk(SKind::App(Box::new(f), Box::new(a)), pos);
        }
        Ok(f)
    }

    fn atom(&mut self) -> Result<STerm, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Name(n) if n == "clip" && *self.peek_at(1) == Tok::LBracket => {
                self.bump();
                self.bump();
                let lo = self.clip_bound()?;
                self.expect(Tok::Comma)?;
                let hi = self.clip_bound()?;
                self.expect(Tok::RBracket)?;
                self.expect(Tok::LParen)?;
                let e = self.term()?;
                self.expect(Tok::RParen)?;
                let mut t = Self::mk(SKind::Builtin(Builtin::Mono(Ident::Clip)), pos);
                for a in [lo, hi, e] {
                    t = Self::mk(SKind::App(Box::new(t), Box::new(a)), pos);
                }
                Ok(t)
            }
            Tok::Name(n) if n == "comment" => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let text = match self.bump() {
                    Tok::Str(s) => s,
                    other => {
                        return Err(ParseError::at(pos, format!("expected string, found {}", other.describe())))
                    }
                };
                self.expect(Tok::RBracket)?;
                Ok(Self::mk(SKind::Builtin(Builtin::Poly(Family::Comment(text.into()))), pos))
            }
            Tok::Name(_) => {
                let n = self.expect_name()?;
                Ok(Self::mk(SKind::Name(n), pos))
            }
            Tok::Int(_) => Ok(Self::mk(SKind::Int(self.int_literal(false)?), pos)),
            Tok::Quote => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let c = self.cond()?;
                    self.expect(Tok::RParen)?;
                    if self.cond_scope.is_none() {
                        return Err(ParseError::at(pos, "computed constants are only allowed in rules"));
                    }
                    Ok(Self::mk(SKind::Computed(c), pos))
                } else {
                    Ok(Self::mk(SKind::ConstRef(self.expect_name()?), pos))
                }
            }
            Tok::LBracket => {
                self.bump();
                let nil = Self::mk(SKind::Builtin(Builtin::Poly(Family::Nil)), pos);
                if self.eat(&Tok::RBracket) {
                    return Ok(nil);
                }
                let mut items = vec![self.term()?];
                while self.eat(&Tok::Semi) {
                    items.push(self.term()?);
                }
                self.expect(Tok::RBracket)?;
                let mut acc = nil;
                for item in items.into_iter().rev() {
                    let p = item.pos;
                    let c = Self::mk(SKind::Builtin(Builtin::Poly(Family::Cons)), p);
                    acc = Self::mk(
                        SKind::App(Box::new(Self::mk(SKind::App(Box::new(c), Box::new(item)), p)), Box::new(acc)),
                        p,
                    );
                }
                Ok(acc)
            }
            Tok::LParen => {
                self.bump();
                // operator section
                if let Some((op, _, _)) = infix_op(self.peek()) {
                    let neg_literal =
                        *self.peek() == Tok::Minus && matches!(self.peek_at(1), Tok::Int(_));
                    if !neg_literal && *self.peek_at(1) == Tok::RParen {
                        self.bump();
                        self.bump();
                        return Ok(Self::mk(SKind::Builtin(op), pos));
                    }
                    if neg_literal && *self.peek_at(2) == Tok::RParen {
                        self.bump();
                        let n = self.int_literal(true)?;
                        self.bump();
                        return Ok(Self::mk(SKind::Int(n), pos));
                    }
                }
                if self.eat(&Tok::RParen) {
                    return Ok(Self::mk(SKind::Builtin(Builtin::Mono(Ident::Unit)), pos));
                }
                let t = self.term()?;
                if self.eat(&Tok::Comma) {
                    let u = self.term()?;
                    self.expect(Tok::RParen)?;
                    let p = Self::mk(SKind::Builtin(Builtin::Poly(Family::PairMk)), pos);
                    return Ok(Self::mk(
                        SKind::App(Box::new(Self::mk(SKind::App(Box::new(p), Box::new(t)), pos)), Box::new(u)),
                        pos,
                    ));
                }
                if self.eat(&Tok::Colon) {
                    let ty = self.ty()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Self::mk(SKind::Ascribe(Box::new(t), ty), pos));
                }
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    /// A bound inside `clip[..]`: a possibly negative literal or any term.
    fn clip_bound(&mut self) -> Result<STerm, ParseError> {
        let pos = self.pos();
        if matches!(self.peek(), Tok::Int(_) | Tok::Minus) {
            Ok(Self::mk(SKind::Int(self.signed_int()?), pos))
        } else {
            self.term()
        }
    }

    fn signed_int(&mut self) -> Result<i128, ParseError> {
        let neg = self.eat(&Tok::Minus);
        self.int_literal(neg)
    }

    // ---- side-condition expressions ----

    pub fn cond(&mut self) -> Result<CondExpr, ParseError> {
        let mut l = self.cond_and()?;
        while self.eat(&Tok::OrOr) {
            let r = self.cond_and()?;
            l = CondExpr::bin(CondOp::Or, l, r);
        }
        Ok(l)
    }

    fn cond_and(&mut self) -> Result<CondExpr, ParseError> {
        let mut l = self.cond_not()?;
        while self.eat(&Tok::AndAnd) {
            let r = self.cond_not()?;
            l = CondExpr::bin(CondOp::And, l, r);
        }
        Ok(l)
    }

    fn cond_not(&mut self) -> Result<CondExpr, ParseError> {
        if self.at_keyword("not") || *self.peek() == Tok::Bang {
            self.bump();
            return Ok(CondExpr::Not(Box::new(self.cond_not()?)));
        }
        self.cond_cmp()
    }

    fn cond_cmp(&mut self) -> Result<CondExpr, ParseError> {
        let l = self.cond_sum()?;
        let op = match self.peek() {
            Tok::EqEq => CondOp::Eq,
            Tok::NotEq => CondOp::Ne,
            Tok::Lt => CondOp::Lt,
            Tok::Le => CondOp::Le,
            Tok::Gt => CondOp::Gt,
            Tok::Ge => CondOp::Ge,
            _ => return Ok(l),
        };
        self.bump();
        let r = self.cond_sum()?;
        Ok(CondExpr::bin(op, l, r))
    }

    fn cond_sum(&mut self) -> Result<CondExpr, ParseError> {
        let mut l = self.cond_prod()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => CondOp::Add,
                Tok::Minus => CondOp::Sub,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.cond_prod()?;
            l = CondExpr::bin(op, l, r);
        }
    }

    fn cond_prod(&mut self) -> Result<CondExpr, ParseError> {
        let mut l = self.cond_pow()?;
        while self.eat(&Tok::Star) {
            let r = self.cond_pow()?;
            l = CondExpr::bin(CondOp::Mul, l, r);
        }
        Ok(l)
    }

    fn cond_pow(&mut self) -> Result<CondExpr, ParseError> {
        let l = self.cond_atom()?;
        if self.eat(&Tok::Caret) {
            let r = self.cond_pow()?;
            return Ok(CondExpr::bin(CondOp::Pow, l, r));
        }
        Ok(l)
    }

    fn cond_atom(&mut self) -> Result<CondExpr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(_) => Ok(CondExpr::Int(BigInt::from(self.int_literal(false)?))),
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                Ok(CondExpr::Int(BigInt::from(self.int_literal(true)?)))
            }
            Tok::LParen => {
                self.bump();
                let c = self.cond()?;
                self.expect(Tok::RParen)?;
                Ok(c)
            }
            Tok::Quote => {
                self.bump();
                self.cond_var(pos)
            }
            Tok::Name(n) if n == "true" || n == "false" => {
                self.bump();
                Ok(CondExpr::Bool(n == "true"))
            }
            Tok::Name(n) if n == "log2floor" => {
                self.bump();
                Ok(CondExpr::Log2(Box::new(self.cond_atom()?)))
            }
            Tok::Name(_) => self.cond_var(pos),
            _ => Err(self.unexpected("a condition operand")),
        }
    }

    fn cond_var(&mut self, pos: Pos) -> Result<CondExpr, ParseError> {
        let n = self.expect_name()?;
        let scope = self
            .cond_scope
            .as_ref()
            .ok_or_else(|| ParseError::at(pos, "conditions may only mention rule variables"))?;
        scope
            .get(&n)
            .map(|v| CondExpr::Var(v.clone()))
            .ok_or_else(|| ParseError::at(pos, format!("unknown rule variable `{n}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> STerm {
        let mut p = Parser::new(src).unwrap();
        let t = p.term().unwrap();
        assert!(p.at_eof());
        t
    }

    fn shape(t: &STerm) -> String {
        match &t.kind {
            SKind::Name(n) => n.clone(),
            SKind::Int(n) => n.to_string(),
            SKind::Builtin(Builtin::Mono(i)) => i.name(),
            SKind::Builtin(Builtin::Poly(f)) => format!("{f:?}"),
            SKind::Lam(n, _, b) => format!("(\\{n}. {})", shape(b)),
            SKind::Let(n, _, r, b) => format!("(let {n} = {} in {})", shape(r), shape(b)),
            SKind::App(f, a) => format!("({} {})", shape(f), shape(a)),
            SKind::Ascribe(e, t) => format!("({} : {t})", shape(e)),
            SKind::ConstRef(n) => format!("'{n}"),
            SKind::Computed(_) => "'(..)".into(),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(shape(&parse("a + b * c")), "(((+) a) (((*) b) c))");
        assert_eq!(shape(&parse("a - b - c")), "(((-) (((-) a) b)) c)");
        assert_eq!(shape(&parse("a :: b :: t")), "((Cons a) ((Cons b) t))");
        assert_eq!(shape(&parse("f x y + 1")), "(((+) ((f x) y)) 1)");
    }

    #[test]
    fn sugar_forms() {
        assert_eq!(shape(&parse("[1; 2]")), "((Cons 1) ((Cons 2) Nil))");
        assert_eq!(shape(&parse("(a, b)")), "((PairMk a) b)");
        assert_eq!(shape(&parse("clip[0,4](x)")), "(((clip 0) 4) x)");
        assert_eq!(shape(&parse("clip[-1,u](x)")), "(((clip -1) u) x)");
        assert_eq!(shape(&parse("(-3)")), "-3");
        assert_eq!(shape(&parse("(-) 3")), "((-) 3)");
        assert_eq!(shape(&parse("\\x y. x")), "(\\x. (\\y. x))");
        assert_eq!(shape(&parse("\\x : int -> int. x")), "(\\x. x)");
    }

    #[test]
    fn types_parse_with_expected_structure() {
        let mut p = Parser::new("(int -> int) -> list (int * list bool)").unwrap();
        assert_eq!(p.ty().unwrap().to_string(), "(int -> int) -> list (int * list bool)");
        let mut p = Parser::new("list (int -> int)").unwrap();
        assert!(p.ty().is_err());
    }

    #[test]
    fn errors_carry_positions() {
        let mut p = Parser::new("let x = in x").unwrap();
        let e = p.term().unwrap_err();
        assert_eq!((e.line, e.col), (1, 9));
    }
}
