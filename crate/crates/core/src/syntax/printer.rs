//! Term printer. Output parses back to an alpha-equivalent term: every
//! binder gets a name unique within the printed text, lambdas carry their
//! parameter types, and polymorphic identifiers whose instance inference
//! could not recover are printed with a type ascription.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::elab::ambiguous_idents;
use super::lexer::{escape_str, is_name_char, is_name_start};
use super::parser::{BUILTIN_NAMES, KEYWORDS};
use crate::expr::{Expr, ExprKind, Var, VarId};
use crate::ident::Ident;
use crate::types::ObjType;

const LEVEL_APP: u8 = 6;
const LEVEL_ATOM: u8 = 7;

#[derive(Clone, Debug, Default)]
pub struct PrintOptions {
    /// Known types of free variables; they make ascriptions rarer.
    pub free_types: HashMap<VarId, ObjType>,
    /// Verbatim text printed in place of the given variables.
    pub overrides: HashMap<VarId, String>,
    /// Names no binder may take. Free variables are named first and are
    /// not affected.
    pub reserved: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Printed {
    pub text: String,
    /// The name each free variable was printed with.
    pub free_names: Vec<(Var, String)>,
}

pub fn print_expr(e: &Expr) -> String {
    print_expr_with(e, &PrintOptions::default()).text
}

pub fn print_expr_with(e: &Expr, opts: &PrintOptions) -> Printed {
    let mut p = Printer {
        used: HashSet::new(),
        next: HashMap::new(),
        names: HashMap::new(),
        overrides: &opts.overrides,
        ascribe: ambiguous_idents(e, &opts.free_types),
        out: String::new(),
    };
    for k in KEYWORDS.iter().chain(BUILTIN_NAMES) {
        p.used.insert(k.to_string());
    }
    collect_symbols(e, &mut p.used);
    let mut free_names = Vec::new();
    for v in crate::expr::free_vars(e) {
        if opts.overrides.contains_key(&v.id) {
            continue;
        }
        let n = p.bind(&v);
        free_names.push((v, n));
    }
    for r in &opts.reserved {
        p.used.insert(r.clone());
    }
    p.expr(e, 0);
    Printed { text: p.out, free_names }
}

fn collect_symbols(e: &Expr, used: &mut HashSet<String>) {
    let mut stack = vec![e];
    while let Some(e) = stack.pop() {
        match e.kind() {
            ExprKind::Ident(Ident::Opaque(s)) => {
                used.insert(s.name.to_string());
            }
            ExprKind::Ident(_) | ExprKind::Var(_) => {}
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
}

/// A valid identifier derived from a name hint.
pub fn sanitize(hint: &str) -> String {
    let mut s: String = hint.chars().filter(|c| is_name_char(*c)).collect();
    if !s.chars().next().is_some_and(is_name_start) {
        s.insert(0, 'v');
    }
    s
}

struct Printer<'o> {
    used: HashSet<String>,
    next: HashMap<String, usize>,
    names: HashMap<VarId, String>,
    overrides: &'o HashMap<VarId, String>,
    ascribe: HashSet<usize>,
    out: String,
}

impl Printer<'_> {
    fn bind(&mut self, v: &Var) -> String {
        let base = sanitize(&v.name);
        let name = if !self.used.contains(&base) {
            base
        } else {
            let k = self.next.entry(base.clone()).or_insert(1);
            loop {
                let cand = format!("{base}_{k}");
                *k += 1;
                if !self.used.contains(&cand) {
                    break cand;
                }
            }
        };
        self.used.insert(name.clone());
        self.names.insert(v.id, name.clone());
        name
    }

    fn open(&mut self, paren: bool) {
        if paren {
            self.out.push('(');
        }
    }

    fn close(&mut self, paren: bool) {
        if paren {
            self.out.push(')');
        }
    }

    fn expr(&mut self, e: &Expr, min: u8) {
        stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || match e.kind() {
            ExprKind::Var(v) => {
                if let Some(text) = self.overrides.get(&v.id) {
                    self.out.push_str(text);
                } else if let Some(n) = self.names.get(&v.id) {
                    self.out.push_str(n);
                } else {
                    let n = self.bind(v);
                    self.out.push_str(&n);
                }
            }
            ExprKind::Ident(i) => self.ident(e, i),
            ExprKind::Abs(v, t, b) => {
                let paren = min > 0;
                self.open(paren);
                let n = self.bind(v);
                let _ = write!(self.out, "\\{n} : {t}. ");
                self.expr(b, 0);
                self.close(paren);
            }
            ExprKind::LetIn(..) => {
                let paren = min > 0;
                self.open(paren);
                let mut cur = e;
                while let ExprKind::LetIn(v, r, b) = cur.kind() {
                    let n = self.bind(v);
                    let _ = write!(self.out, "let {n} = ");
                    self.expr(r, 0);
                    self.out.push_str(" in ");
                    cur = b;
                }
                self.expr(cur, 0);
                self.close(paren);
            }
            ExprKind::App(..) => self.app(e, min),
        })
    }

    fn ident(&mut self, e: &Expr, i: &Ident) {
        let text = match i {
            Ident::Comment(s, _) => format!("comment[{}]", escape_str(s)),
            other => other.name(),
        };
        if self.ascribe.contains(&e.addr()) {
            let _ = write!(self.out, "({text} : {})", i.ty());
        } else {
            self.out.push_str(&text);
        }
    }

    fn app(&mut self, e: &Expr, min: u8) {
        let (head, args) = e.spine();
        let marked = self.ascribe.contains(&head.addr());
        if let Some(i) = head.as_ident() {
            match (i, args.len()) {
                (Ident::Cons(k), 2) => {
                    if let Some(items) = e.as_list_literal() {
                        let ascribe = self.list_needs_ascription(e);
                        if ascribe {
                            self.out.push('(');
                        }
                        self.out.push('[');
                        for (j, item) in items.iter().enumerate() {
                            if j > 0 {
                                self.out.push_str("; ");
                            }
                            self.expr(item, 0);
                        }
                        self.out.push(']');
                        if ascribe {
                            let _ = write!(self.out, " : {})", ObjType::list(k.clone()));
                        }
                        return;
                    }
                }
                (Ident::PairMk(a, b), 2) => {
                    if marked {
                        self.out.push('(');
                    }
                    self.out.push('(');
                    self.expr(args[0], 0);
                    self.out.push_str(", ");
                    self.expr(args[1], 0);
                    self.out.push(')');
                    if marked {
                        let _ = write!(self.out, " : {})", ObjType::pair(a.clone(), b.clone()));
                    }
                    return;
                }
                (Ident::Clip, 3) => {
                    if let (Some(lo), Some(hi)) = (args[0].as_int(), args[1].as_int()) {
                        let _ = write!(self.out, "clip[{lo},{hi}](");
                        self.expr(args[2], 0);
                        self.out.push(')');
                        return;
                    }
                }
                _ => {}
            }
            if let (Some((sym, p)), 2, false) = (i.infix(), args.len(), marked) {
                let right = matches!(i, Ident::Cons(_) | Ident::Pow);
                let (lp, rp) = if right { (p + 1, p) } else { (p, p + 1) };
                let paren = min > p;
                self.open(paren);
                self.expr(args[0], lp);
                let _ = write!(self.out, " {sym} ");
                self.expr(args[1], rp);
                self.close(paren);
                return;
            }
        }
        let paren = min > LEVEL_APP;
        self.open(paren);
        self.expr(head, LEVEL_ATOM);
        for a in args {
            self.out.push(' ');
            self.expr(a, LEVEL_ATOM);
        }
        self.close(paren);
    }

    fn list_needs_ascription(&self, e: &Expr) -> bool {
        let mut cur = e;
        loop {
            let (head, args) = cur.spine();
            if self.ascribe.contains(&head.addr()) {
                return true;
            }
            match args.as_slice() {
                [_, t] => cur = t,
                _ => return false,
            }
        }
    }
}
