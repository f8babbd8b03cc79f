//! Concrete syntax for types, terms, side conditions and rule files.

mod elab;
mod lexer;
mod parser;
mod printer;
mod rules;

use std::collections::HashMap;

use thiserror::Error;

use crate::expr::{Expr, Var};
use crate::side_cond::CondExpr;
use crate::types::ObjType;

pub use elab::{elaborate, Elaborated, Scope};
pub use lexer::Pos;
pub use printer::{print_expr, print_expr_with, sanitize, PrintOptions, Printed};
pub use rules::{parse_rule_file, parse_rule_file_in, print_rule, print_rule_file, print_symbol, RuleFile};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(pos: Pos, msg: impl Into<String>) -> Self {
        ParseError { line: pos.line, col: pos.col, message: msg.into() }
    }
}

fn finish<T>(p: &parser::Parser, v: T) -> Result<T, ParseError> {
    if p.at_eof() {
        Ok(v)
    } else {
        Err(p.error("unexpected trailing input"))
    }
}

pub fn parse_type(src: &str) -> Result<ObjType, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let t = p.ty()?;
    finish(&p, t)
}

/// Parses and elaborates a closed-or-open term; free names become fresh variables.
pub fn parse_term(src: &str) -> Result<Expr, ParseError> {
    Ok(parse_term_in(src, &Scope::default())?.expr)
}

pub fn parse_term_in(src: &str, scope: &Scope) -> Result<Elaborated, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let t = p.term()?;
    let t = finish(&p, t)?;
    elaborate(&t, scope, None)
}

/// Parses a side condition over the given variables.
pub fn parse_cond(src: &str, vars: &HashMap<String, Var>) -> Result<CondExpr, ParseError> {
    let mut p = parser::Parser::new(src)?;
    p.cond_scope = Some(vars.clone());
    let c = p.cond()?;
    finish(&p, c)
}
