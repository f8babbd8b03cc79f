//! Rule files: `symbol` declarations and `rule` definitions.
//!
//! ```text
//! symbol map : (int -> int) -> list int -> list int = \f l. ...
//! rule div_pow2 : forall (n : int) ('m : int), when 2 ^ log2floor m == m, n / m => n >> '(log2floor m)
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::elab::{elaborate, Scope};
use super::lexer::Pos;
use super::parser::{Parser, BUILTIN_NAMES};
use super::printer::{print_expr_with, PrintOptions};
use super::ParseError;
use crate::expr::{alpha_eq, Expr, ExprKind, Var};
use crate::ident::Symbol;
use crate::pattern::{CompileError, PatVar, Pattern, RewriteRule, RuleSet};

#[derive(Clone, Debug, Default)]
pub struct RuleFile {
    pub symbols: Vec<Arc<Symbol>>,
    pub rules: Vec<RewriteRule>,
    /// Source position of each rule, parallel to `rules`.
    pub positions: Vec<(usize, usize)>,
}

impl RuleFile {
    pub fn into_rule_set(self) -> Result<RuleSet, CompileError> {
        RuleSet::new(self.rules, self.symbols)
    }

    /// Same symbols and structurally equal rules.
    pub fn equiv(&self, other: &RuleFile) -> bool {
        self.symbols.len() == other.symbols.len()
            && self.rules.len() == other.rules.len()
            && self.symbols.iter().zip(&other.symbols).all(|(a, b)| {
                a.name == b.name
                    && a.ty == b.ty
                    && match (&a.definition, &b.definition) {
                        (None, None) => true,
                        (Some(x), Some(y)) => alpha_eq(x, y),
                        _ => false,
                    }
            })
            && self.rules.iter().zip(&other.rules).all(|(a, b)| a.equiv(b))
    }
}

pub fn parse_rule_file(src: &str) -> Result<RuleFile, ParseError> {
    parse_rule_file_in(src, &[])
}

/// Parses a rule file that may also refer to the given symbols.
pub fn parse_rule_file_in(src: &str, known: &[Arc<Symbol>]) -> Result<RuleFile, ParseError> {
    let mut p = Parser::new(src)?;
    let mut symbols: HashMap<String, Arc<Symbol>> =
        known.iter().map(|s| (s.name.to_string(), s.clone())).collect();
    let mut file = RuleFile::default();
    while !p.at_eof() {
        if p.at_keyword("symbol") {
            let s = parse_symbol(&mut p, &symbols)?;
            symbols.insert(s.name.to_string(), s.clone());
            file.symbols.push(s);
        } else if p.at_keyword("rule") {
            let pos = p.pos();
            let r = parse_rule(&mut p, &symbols, file.rules.len())?;
            file.rules.push(r);
            file.positions.push((pos.line, pos.col));
        } else {
            return Err(p.error("expected `rule` or `symbol`"));
        }
    }
    Ok(file)
}

fn parse_symbol(p: &mut Parser, symbols: &HashMap<String, Arc<Symbol>>) -> Result<Arc<Symbol>, ParseError> {
    p.expect_keyword("symbol")?;
    let pos = p.pos();
    let name = p.expect_name()?;
    if BUILTIN_NAMES.contains(&name.as_str()) || symbols.contains_key(&name) {
        return Err(ParseError::at(pos, format!("`{name}` is already defined")));
    }
    p.expect(super::lexer::Tok::Colon)?;
    let ty = p.ty()?;
    let definition = if p.eat(&super::lexer::Tok::Eq) {
        let dpos = p.pos();
        let t = p.term()?;
        let scope = Scope { symbols: symbols.clone(), ..Scope::default() };
        let el = elaborate(&t, &scope, Some(&ty))?;
        if let Some((v, _)) = el.free.first() {
            return Err(ParseError::at(dpos, format!("definition of `{name}` mentions unknown name `{}`", v.name)));
        }
        if el.ty != ty {
            return Err(ParseError::at(dpos, format!("definition of `{name}` has type {}, declared {ty}", el.ty)));
        }
        Some(el.expr)
    } else {
        None
    };
    Ok(Arc::new(Symbol { name: name.into(), ty, definition }))
}

fn parse_rule(
    p: &mut Parser,
    symbols: &HashMap<String, Arc<Symbol>>,
    priority: usize,
) -> Result<RewriteRule, ParseError> {
    use super::lexer::Tok;
    p.expect_keyword("rule")?;
    let name = p.expect_name()?;
    p.expect(Tok::Colon)?;

    let mut vars: Vec<PatVar> = Vec::new();
    let mut scope = Scope { symbols: symbols.clone(), ..Scope::default() };
    if p.at_keyword("forall") {
        p.bump();
        while *p.peek() == Tok::LParen {
            p.bump();
            let constant = p.eat(&Tok::Quote);
            let pos = p.pos();
            let n = p.expect_name()?;
            if BUILTIN_NAMES.contains(&n.as_str()) || symbols.contains_key(&n) {
                return Err(ParseError::at(pos, format!("`{n}` cannot name a rule variable")));
            }
            if vars.iter().any(|v| *v.var.name == *n) {
                return Err(ParseError::at(pos, format!("rule variable `{n}` declared twice")));
            }
            p.expect(Tok::Colon)?;
            let ty = p.ty()?;
            p.expect(Tok::RParen)?;
            let var = Var::fresh(n.as_str());
            scope.vars.insert(n.clone(), (var.clone(), Some(ty.clone())));
            if constant {
                scope.constants.insert(n);
            }
            vars.push(PatVar { var, ty, constant });
        }
        p.expect(Tok::Comma)?;
    }
    let cond_names: HashMap<String, Var> = vars.iter().map(|v| (v.var.name.to_string(), v.var.clone())).collect();
    p.cond_scope = Some(cond_names);
    let result = (|| {
        let side_condition = if p.at_keyword("when") {
            p.bump();
            let c = p.cond()?;
            p.expect(Tok::Comma)?;
            Some(c)
        } else {
            None
        };
        let lpos = p.pos();
        let lhs_s = p.term()?;
        p.expect(Tok::FatArrow)?;
        let rhs_s = p.term()?;
        Ok((side_condition, lpos, lhs_s, rhs_s))
    })();
    p.cond_scope = None;
    let (side_condition, lpos, lhs_s, rhs_s) = result?;

    let lhs_el = elaborate(&lhs_s, &scope, None)?;
    if !lhs_el.computed.is_empty() {
        return Err(ParseError::at(lpos, "computed constants cannot appear on the left-hand side"));
    }
    let lhs = to_pattern(&lhs_el.expr, &vars, lpos)?;
    let rhs_el = elaborate(&rhs_s, &scope, Some(&lhs_el.ty))?;
    Ok(RewriteRule {
        name,
        vars,
        lhs,
        rhs: rhs_el.expr,
        computed: rhs_el.computed,
        side_condition,
        priority,
    })
}

fn to_pattern(e: &Expr, vars: &[PatVar], pos: Pos) -> Result<Pattern, ParseError> {
    match e.kind() {
        ExprKind::Var(v) => match vars.iter().find(|p| p.var == *v) {
            Some(p) if p.constant => Ok(Pattern::ConstWildcard(v.clone())),
            Some(_) => Ok(Pattern::Wildcard(v.clone())),
            None => Err(ParseError::at(pos, format!("`{}` is not declared by `forall`", v.name))),
        },
        ExprKind::Ident(i) => Ok(Pattern::Ident(i.clone())),
        ExprKind::App(f, a) => Ok(Pattern::app(to_pattern(f, vars, pos)?, to_pattern(a, vars, pos)?)),
        ExprKind::Abs(..) | ExprKind::LetIn(..) => {
            Err(ParseError::at(pos, "left-hand sides cannot contain binders"))
        }
    }
}

pub fn print_symbol(s: &Symbol) -> String {
    let mut out = format!("symbol {} : {}", s.name, s.ty);
    if let Some(d) = &s.definition {
        let _ = write!(out, " = {}", print_expr_with(d, &PrintOptions::default()).text);
    }
    out
}

pub fn print_rule(r: &RewriteRule) -> String {
    let mut out = format!("rule {} :", r.name);
    if !r.vars.is_empty() {
        out.push_str(" forall");
        for v in &r.vars {
            let q = if v.constant { "'" } else { "" };
            let _ = write!(out, " ({q}{} : {})", v.var.name, v.ty);
        }
        out.push(',');
    }
    if let Some(c) = &r.side_condition {
        let _ = write!(out, " when {c},");
    }
    let mut opts = PrintOptions {
        free_types: r.vars.iter().map(|v| (v.var.id, v.ty.clone())).collect(),
        reserved: r.vars.iter().map(|v| v.var.name.to_string()).collect(),
        ..PrintOptions::default()
    };
    let lhs = print_expr_with(&r.lhs.to_expr(), &opts).text;
    for (v, c) in &r.computed {
        opts.free_types.insert(v.id, crate::types::ObjType::INT);
        opts.overrides.insert(v.id, format!("'({c})"));
    }
    let rhs = print_expr_with(&r.rhs, &opts).text;
    let _ = write!(out, " {lhs} => {rhs}");
    out
}

pub fn print_rule_file(f: &RuleFile) -> String {
    let mut out = String::new();
    for s in &f.symbols {
        out.push_str(&print_symbol(s));
        out.push('\n');
    }
    for r in &f.rules {
        out.push_str(&print_rule(r));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::side_cond::check_rule_wf;

    const SHIFT: &str =
        "rule div_pow2 : forall (n : int) ('m : int), when 2 ^ log2floor m == m, n / m => n >> '(log2floor m)";

    #[test]
    fn shift_rule_parses_and_is_well_formed() {
        let f = parse_rule_file(SHIFT).unwrap();
        let r = &f.rules[0];
        assert_eq!(r.vars.len(), 2);
        assert!(r.vars[1].constant);
        assert!(matches!(r.lhs, Pattern::App(..)));
        assert_eq!(r.computed.len(), 1);
        assert!(check_rule_wf(r).is_empty());
        assert_eq!(print_rule(r), SHIFT);
    }

    #[test]
    fn symbols_and_round_trip() {
        let src = "\
symbol map : (int -> int) -> list int -> list int = \\f l. list_rect [] (\\h t r. f h :: r) l
rule map_nil : forall (f : int -> int), map f [] => []
rule map_cons : forall (f : int -> int) (x : int) (xs : list int), map f (x :: xs) => f x :: map f xs
";
        let f = parse_rule_file(src).unwrap();
        assert_eq!(f.symbols.len(), 1);
        assert_eq!(f.rules.len(), 2);
        let printed = print_rule_file(&f);
        let g = parse_rule_file(&printed).unwrap();
        assert!(f.equiv(&g), "{printed}");
    }

    #[test]
    fn undeclared_lhs_variable_is_an_error() {
        let e = parse_rule_file("rule bad : forall (x : int), x + y => x").unwrap_err();
        assert!(e.message.contains("not declared"), "{e}");
    }

    #[test]
    fn malformed_rule_reports_position() {
        let e = parse_rule_file("rule r : forall (x : int) x + 0 => x").unwrap_err();
        assert_eq!(e.line, 1);
        assert_eq!(e.col, 27);
    }
}
