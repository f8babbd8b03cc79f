//! Simple type checking of terms.

use std::collections::HashMap;

use thiserror::Error;

use crate::expr::{Expr, ExprKind, VarId};
use crate::types::ObjType;

/// Child index path from the root: `App` 0 = function, 1 = argument;
/// `Abs` 0 = body; `LetIn` 0 = bound term, 1 = body.
pub type Path = Vec<u8>;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("unbound variable `{name}` at {path:?}")]
    UnboundVariable { name: String, path: Path },
    #[error("type mismatch at {path:?}: expected {expected}, found {found}")]
    TypeMismatch { expected: ObjType, found: ObjType, path: Path },
    #[error("cannot apply a term of type {found} at {path:?}")]
    NotAFunction { found: ObjType, path: Path },
}

pub type TypeEnv = HashMap<VarId, ObjType>;

pub fn type_check(e: &Expr, env: &TypeEnv) -> Result<ObjType, TypeError> {
    let mut env = env.clone();
    let mut path = Vec::new();
    check(e, &mut env, &mut path)
}

/// Type of a closed term, or of a term whose free variables are all in `env`.
fn check(e: &Expr, env: &mut TypeEnv, path: &mut Path) -> Result<ObjType, TypeError> {
    stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || match e.kind() {
        ExprKind::Var(v) => env.get(&v.id).cloned().ok_or_else(|| TypeError::UnboundVariable {
            name: v.name.to_string(),
            path: path.clone(),
        }),
        ExprKind::Ident(i) => Ok(i.ty()),
        ExprKind::Abs(v, t, body) => {
            let saved = env.insert(v.id, t.clone());
            path.push(0);
            let r = check(body, env, path);
            path.pop();
            restore(env, v.id, saved);
            Ok(ObjType::arrow(t.clone(), r?))
        }
        ExprKind::App(f, a) => {
            path.push(0);
            let tf = check(f, env, path)?;
            path.pop();
            path.push(1);
            let ta = check(a, env, path)?;
            path.pop();
            match tf {
                ObjType::Arrow(d, c) => {
                    if *d != ta {
                        path.push(1);
                        let err = TypeError::TypeMismatch {
                            expected: (*d).clone(),
                            found: ta,
                            path: path.clone(),
                        };
                        path.pop();
                        return Err(err);
                    }
                    Ok((*c).clone())
                }
                found @ ObjType::Base(_) => Err(TypeError::NotAFunction { found, path: path.clone() }),
            }
        }
        ExprKind::LetIn(v, rhs, body) => {
            path.push(0);
            let tr = check(rhs, env, path)?;
            path.pop();
            let saved = env.insert(v.id, tr);
            path.push(1);
            let r = check(body, env, path);
            path.pop();
            restore(env, v.id, saved);
            r
        }
    })
}

fn restore(env: &mut TypeEnv, id: VarId, saved: Option<ObjType>) {
    match saved {
        Some(t) => env.insert(id, t),
        None => env.remove(&id),
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Var;
    use crate::ident::Ident;
    use crate::types::BaseKind;

    #[test]
    fn primitive_signature() {
        let t = type_check(&Expr::ident(Ident::Add), &TypeEnv::new()).unwrap();
        assert_eq!(t, ObjType::arrows([ObjType::INT, ObjType::INT], ObjType::INT));
    }

    #[test]
    fn identity_function() {
        let x = Var::fresh("x");
        let id = Expr::abs(x.clone(), ObjType::INT, Expr::var(&x));
        assert_eq!(type_check(&id, &TypeEnv::new()).unwrap(), ObjType::arrow(ObjType::INT, ObjType::INT));
    }

    #[test]
    fn fst_of_integer_is_rejected() {
        let e = Expr::app(Expr::ident(Ident::Fst(BaseKind::Int, BaseKind::Int)), Expr::int(3));
        match type_check(&e, &TypeEnv::new()) {
            Err(TypeError::TypeMismatch { path, .. }) => assert_eq!(path, vec![1]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unbound_variable_reports_path() {
        let x = Var::fresh("x");
        let e = Expr::binop(Ident::Add, Expr::int(1), Expr::var(&x));
        match type_check(&e, &TypeEnv::new()) {
            Err(TypeError::UnboundVariable { name, path }) => {
                assert_eq!(name, "x");
                assert_eq!(path, vec![1]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn applying_a_base_value_fails() {
        let e = Expr::app(Expr::int(1), Expr::int(2));
        assert!(matches!(type_check(&e, &TypeEnv::new()), Err(TypeError::NotAFunction { .. })));
    }
}
