//! Rewriting and partial evaluation for a small typed lambda calculus with
//! `let` binders.

pub mod baseline;
pub mod bench;
pub mod bounds;
pub mod denote;
pub mod engine;
pub mod expr;
pub mod gen;
pub mod ident;
pub mod pattern;
pub mod side_cond;
pub mod stdlib;
pub mod syntax;
pub mod types;
pub mod typing;

pub use expr::{alpha_eq, Expr, ExprKind, Var, VarId};
pub use ident::{Ident, Symbol};
pub use pattern::{Pattern, RewriteRule, RuleSet};
pub use types::{BaseKind, ObjType};
